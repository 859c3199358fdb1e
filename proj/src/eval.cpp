#include "detkit/eval.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "detkit/error.hpp"

namespace detkit {

void validate_ground_truth(const GroundTruth& gt) {
  if (!is_valid(gt.box) || gt.box.area() <= 0.0) {
    std::ostringstream msg;
    msg << "box (" << gt.box.x1 << "," << gt.box.y1 << "," << gt.box.x2 << "," << gt.box.y2
        << ") must be finite with positive area";
    fail(ErrorKind::InvalidGroundTruth, msg.str());
  }
  if (gt.class_id < 0) {
    fail(ErrorKind::InvalidGroundTruth, "negative class id " + std::to_string(gt.class_id));
  }
}

const char* to_string(Interpolation interp) noexcept {
  return interp == Interpolation::AllPoint ? "all-point" : "voc11";
}

Interpolation interpolation_from_string(const std::string& name) {
  if (name == "all-point" || name == "allpoint") return Interpolation::AllPoint;
  if (name == "voc11" || name == "11-point") return Interpolation::Voc11;
  fail(ErrorKind::InvalidParams, "unknown interpolation '" + name + "'");
}

double mean_ap(const std::vector<ClassAp>& per_class) noexcept {
  double sum = 0.0;
  int counted = 0;
  for (const ClassAp& entry : per_class) {
    if (entry.gt_count >= 1) {
      sum += entry.ap;
      ++counted;
    }
  }
  return counted > 0 ? sum / static_cast<double>(counted) : 0.0;
}

EvalReport make_eval_report(double iou_threshold, std::vector<ClassAp> per_class) {
  EvalReport report;
  report.iou_threshold = iou_threshold;
  report.per_class = std::move(per_class);
  report.map = mean_ap(report.per_class);
  return report;
}

MatchSet match_predictions(const std::vector<Detection>& preds,
                           const std::vector<GroundTruth>& gts, double iou_threshold) {
  for (const Detection& det : preds) validate_detection(det);
  for (const GroundTruth& gt : gts) validate_ground_truth(gt);

  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detection_rank_before(preds[a], preds[b]);
  });

  MatchSet out;
  for (const GroundTruth& gt : gts) out.gt_count_by_class[gt.class_id] += 1;

  std::vector<bool> taken(gts.size(), false);
  out.predictions.reserve(preds.size());
  for (std::size_t idx : order) {
    const Detection& det = preds[idx];
    double best_iou = 0.0;
    std::size_t best = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].class_id != det.class_id) continue;
      const double overlap = iou(det.box, gts[g].box);
      if (overlap > best_iou) {
        best_iou = overlap;
        best = g;
      }
    }
    PredictionMatch match;
    match.confidence = det.confidence;
    match.class_id = det.class_id;
    if (best < gts.size() && best_iou >= iou_threshold) {
      match.is_true_positive = true;
      match.matched_gt = best;
      taken[best] = true;
    }
    out.predictions.push_back(match);
  }
  return out;
}

namespace {

double all_point_ap(const std::vector<double>& precision, const std::vector<double>& recall) {
  // Precision envelope from the right, then sum rectangle areas over recall
  // increments.
  double envelope = 0.0;
  double ap = 0.0;
  for (std::size_t i = precision.size(); i-- > 0;) {
    envelope = std::max(envelope, precision[i]);
    const double prev = i == 0 ? 0.0 : recall[i - 1];
    ap += (recall[i] - prev) * envelope;
  }
  return ap;
}

double voc11_ap(const std::vector<double>& precision, const std::vector<double>& recall) {
  double sum = 0.0;
  for (int step = 0; step <= 10; ++step) {
    const double r = static_cast<double>(step) / 10.0;
    double best = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
      if (recall[i] >= r) best = std::max(best, precision[i]);
    }
    sum += best;
  }
  return sum / 11.0;
}

}  // namespace

double average_precision(const std::vector<bool>& ranked_tp, int gt_count,
                         Interpolation interp) {
  if (gt_count <= 0) fail(ErrorKind::NoGroundTruth, "AP undefined without ground truth");
  if (ranked_tp.empty()) return 0.0;

  std::vector<double> precision(ranked_tp.size());
  std::vector<double> recall(ranked_tp.size());
  int tp = 0;
  for (std::size_t i = 0; i < ranked_tp.size(); ++i) {
    if (ranked_tp[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
  }
  return interp == Interpolation::AllPoint ? all_point_ap(precision, recall)
                                           : voc11_ap(precision, recall);
}

double average_precision(const MatchSet& matches, int class_id, Interpolation interp) {
  std::vector<bool> flags;
  for (const PredictionMatch& match : matches.predictions) {
    if (match.class_id == class_id) flags.push_back(match.is_true_positive);
  }
  auto it = matches.gt_count_by_class.find(class_id);
  const int gt_count = it == matches.gt_count_by_class.end() ? 0 : it->second;
  return average_precision(flags, gt_count, interp);
}

namespace {

// One pooled prediction outcome; the extra fields give a total order so the
// global ranking is deterministic across images and platforms.
struct PooledEntry {
  double confidence;
  AbsBox box;
  std::string model_id;
  std::string image_id;
  bool is_true_positive;

  bool rank_before(const PooledEntry& other) const {
    if (confidence != other.confidence) return confidence > other.confidence;
    if (box.x1 != other.box.x1) return box.x1 < other.box.x1;
    if (box.y1 != other.box.y1) return box.y1 < other.box.y1;
    if (model_id != other.model_id) return model_id < other.model_id;
    if (box.x2 != other.box.x2) return box.x2 < other.box.x2;
    if (box.y2 != other.box.y2) return box.y2 < other.box.y2;
    return image_id < other.image_id;
  }
};

}  // namespace

EvalReport evaluate(const PredictionsByImage& preds, const GroundTruthByImage& gts,
                    double iou_threshold, const std::vector<int>& class_ids,
                    Interpolation interp) {
  std::set<std::string> images;
  for (const auto& [image, list] : preds) images.insert(image);
  for (const auto& [image, list] : gts) images.insert(image);

  static const std::vector<Detection> kNoPreds;
  static const std::vector<GroundTruth> kNoGts;

  std::map<int, std::vector<PooledEntry>> pooled;
  std::map<int, int> gt_counts;
  for (const std::string& image : images) {
    auto pit = preds.find(image);
    auto git = gts.find(image);
    const std::vector<Detection>& image_preds = pit == preds.end() ? kNoPreds : pit->second;
    const std::vector<GroundTruth>& image_gts = git == gts.end() ? kNoGts : git->second;

    const MatchSet matches = match_predictions(image_preds, image_gts, iou_threshold);
    for (const auto& [cls, count] : matches.gt_count_by_class) gt_counts[cls] += count;

    // match_predictions reports in rank order of the sorted predictions;
    // recover the box/model keys by re-sorting the same way.
    std::vector<std::size_t> order(image_preds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return detection_rank_before(image_preds[a], image_preds[b]);
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const Detection& det = image_preds[order[rank]];
      pooled[det.class_id].push_back(PooledEntry{
          det.confidence, det.box, det.model_id, image,
          matches.predictions[rank].is_true_positive});
    }
  }

  std::vector<int> classes = class_ids;
  if (classes.empty()) {
    std::set<int> seen;
    for (const auto& [cls, count] : gt_counts) seen.insert(cls);
    for (const auto& [cls, entries] : pooled) seen.insert(cls);
    classes.assign(seen.begin(), seen.end());
  }

  std::vector<ClassAp> per_class;
  per_class.reserve(classes.size());
  for (int cls : classes) {
    ClassAp entry;
    entry.class_id = cls;
    entry.gt_count = gt_counts.count(cls) ? gt_counts[cls] : 0;
    auto it = pooled.find(cls);
    if (it != pooled.end()) {
      std::sort(it->second.begin(), it->second.end(),
                [](const PooledEntry& a, const PooledEntry& b) { return a.rank_before(b); });
      entry.prediction_count = static_cast<int>(it->second.size());
      if (entry.gt_count >= 1) {
        std::vector<bool> flags;
        flags.reserve(it->second.size());
        for (const PooledEntry& pe : it->second) flags.push_back(pe.is_true_positive);
        entry.ap = average_precision(flags, entry.gt_count, interp);
      }
    }
    per_class.push_back(entry);
  }
  return make_eval_report(iou_threshold, std::move(per_class));
}

int select_best_epoch(const EpochSeries& series) {
  if (series.entries.empty()) fail(ErrorKind::EmptySeries, "no epochs to select from");
  for (std::size_t i = 1; i < series.entries.size(); ++i) {
    if (series.entries[i].first <= series.entries[i - 1].first) {
      fail(ErrorKind::InvalidParams, "epoch indices must be strictly increasing");
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < series.entries.size(); ++i) {
    if (series.entries[i].second.map > series.entries[best].second.map) best = i;
  }
  return series.entries[best].first;
}

}  // namespace detkit
