#include "detkit/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "detkit/error.hpp"

namespace detkit {

std::vector<Detection> pool_predictions(const std::vector<ModelRun>& runs,
                                        const std::string& image_id) {
  std::vector<Detection> pooled;
  for (const ModelRun& run : runs) {
    auto it = run.predictions.find(image_id);
    if (it == run.predictions.end()) {
      fail(ErrorKind::UnknownImage,
           "run '" + run.model_id + "' has no predictions entry for image '" + image_id + "'");
    }
    for (const Detection& det : it->second) {
      if (det.model_id != run.model_id) {
        fail(ErrorKind::InvalidDetection, "detection in run '" + run.model_id +
                                              "' tagged with model '" + det.model_id + "'");
      }
      pooled.push_back(det);
    }
  }
  return pooled;
}

namespace {

std::vector<ModelRun const*> resolve_members(const EnsembleSpec& spec,
                                             const std::vector<ModelRun>& runs) {
  std::set<std::string> unique(spec.member_ids.begin(), spec.member_ids.end());
  if (unique.size() != spec.member_ids.size()) {
    fail(ErrorKind::InvalidParams, "ensemble member ids must be unique");
  }
  if (spec.member_ids.empty()) {
    fail(ErrorKind::InvalidParams, "ensemble needs at least one member");
  }
  std::vector<ModelRun const*> members;
  for (const std::string& id : spec.member_ids) {
    auto it = std::find_if(runs.begin(), runs.end(),
                           [&](const ModelRun& run) { return run.model_id == id; });
    if (it == runs.end()) fail(ErrorKind::UnknownModel, "no run with model id '" + id + "'");
    members.push_back(&*it);
  }
  return members;
}

}  // namespace

EvalReport evaluate_ensemble(const EnsembleSpec& spec, const std::vector<ModelRun>& runs,
                             const GroundTruthByImage& gts, double iou_threshold,
                             const std::vector<int>& class_ids, Interpolation interp) {
  const auto members = resolve_members(spec, runs);
  if (spec.fusion.model_count != static_cast<int>(members.size())) {
    fail(ErrorKind::InvalidParams, "fusion model_count must equal the member count");
  }

  std::set<std::string> images;
  for (const ModelRun* run : members) {
    for (const auto& [image, list] : run->predictions) images.insert(image);
  }

  PredictionsByImage fused;
  for (const std::string& image : images) {
    std::vector<Detection> pooled;
    for (const ModelRun* run : members) {
      auto it = run->predictions.find(image);
      if (it == run->predictions.end()) {
        fail(ErrorKind::UnknownImage, "run '" + run->model_id +
                                          "' has no predictions entry for image '" + image + "'");
      }
      pooled.insert(pooled.end(), it->second.begin(), it->second.end());
    }
    fused[image] = combine(std::move(pooled), spec.fusion);
  }
  return evaluate(fused, gts, iou_threshold, class_ids, interp);
}

namespace {

const EvalReport& selection_report(const ModelRun& run, SelectionSplit split) {
  switch (split) {
    case SelectionSplit::Test:
      if (!run.test_report) {
        fail(ErrorKind::MissingReport, "run '" + run.model_id + "' has no test report");
      }
      return *run.test_report;
    case SelectionSplit::Validation:
      if (!run.validation_report) {
        fail(ErrorKind::MissingReport, "run '" + run.model_id + "' has no validation report");
      }
      return *run.validation_report;
    case SelectionSplit::PreferTest:
      if (run.test_report) return *run.test_report;
      if (run.validation_report) return *run.validation_report;
      fail(ErrorKind::MissingReport, "run '" + run.model_id + "' has no report");
  }
  fail(ErrorKind::MissingReport, "unreachable");
}

double class_ap(const EvalReport& report, int class_id, const std::string& model_id) {
  for (const ClassAp& entry : report.per_class) {
    if (entry.class_id == class_id) return entry.ap;
  }
  fail(ErrorKind::MissingReport,
       "report of run '" + model_id + "' lacks class " + std::to_string(class_id));
}

}  // namespace

SelectionResult select_per_class_best(const std::vector<ModelRun>& runs,
                                      const SelectionPolicy& policy, SelectionSplit split) {
  if (policy.margin < 0.0) fail(ErrorKind::InvalidParams, "margin must be nonnegative");
  auto baseline_it = std::find_if(runs.begin(), runs.end(), [&](const ModelRun& run) {
    return run.model_id == policy.baseline_id;
  });
  if (baseline_it == runs.end()) {
    fail(ErrorKind::UnknownModel, "baseline '" + policy.baseline_id + "' not among the runs");
  }
  const EvalReport& baseline_report = selection_report(*baseline_it, split);

  SelectionResult result;
  std::set<std::string> members{policy.baseline_id};
  for (const ClassAp& baseline_entry : baseline_report.per_class) {
    if (baseline_entry.gt_count < 1) continue;
    const int cls = baseline_entry.class_id;

    // Winner: maximal AP; ties prefer the baseline, then the smaller id.
    std::string winner_id = policy.baseline_id;
    double winner_ap = baseline_entry.ap;
    for (const ModelRun& run : runs) {
      const double ap = class_ap(selection_report(run, split), cls, run.model_id);
      const bool better =
          ap > winner_ap ||
          (ap == winner_ap && winner_id != policy.baseline_id &&
           (run.model_id == policy.baseline_id || run.model_id < winner_id));
      if (better) {
        winner_id = run.model_id;
        winner_ap = ap;
      }
    }

    ClassWinner winner;
    winner.class_id = cls;
    winner.model_id = winner_id;
    winner.ap = winner_ap;
    winner.baseline_ap = baseline_entry.ap;
    winner.selected =
        winner_id != policy.baseline_id && winner_ap - baseline_entry.ap > policy.margin;
    if (winner.selected) members.insert(winner_id);
    result.winners.push_back(std::move(winner));
  }

  // Baseline first, remaining members in lexicographic order.
  result.spec.member_ids.push_back(policy.baseline_id);
  for (const std::string& id : members) {
    if (id != policy.baseline_id) result.spec.member_ids.push_back(id);
  }
  result.spec.fusion = default_wbf_params(static_cast<int>(result.spec.member_ids.size()));
  return result;
}

ImprovementReport relative_improvement(const EvalReport& candidate,
                                       const EvalReport& baseline) {
  if (candidate.iou_threshold != baseline.iou_threshold) {
    fail(ErrorKind::MixedThresholds, "reports evaluated at different IoU thresholds");
  }
  if (baseline.map == 0.0) {
    fail(ErrorKind::ZeroBaseline, "baseline mAP is zero");
  }

  ImprovementReport out;
  out.map_percent = 100.0 * (candidate.map - baseline.map) / baseline.map;
  for (const ClassAp& base_entry : baseline.per_class) {
    auto it = std::find_if(
        candidate.per_class.begin(), candidate.per_class.end(),
        [&](const ClassAp& entry) { return entry.class_id == base_entry.class_id; });
    if (it == candidate.per_class.end()) {
      fail(ErrorKind::MixedThresholds,
           "reports cover different classes (missing class " +
               std::to_string(base_entry.class_id) + ")");
    }
    ClassImprovement imp;
    imp.class_id = base_entry.class_id;
    if (base_entry.ap > 0.0) {
      imp.percent = 100.0 * (it->ap - base_entry.ap) / base_entry.ap;
    }
    out.per_class.push_back(imp);
  }
  return out;
}

std::string format_percent(double percent) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.2f", percent);
  return buffer;
}

long round_percent(double percent) noexcept { return std::lround(percent); }

}  // namespace detkit
