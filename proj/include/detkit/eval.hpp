#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detkit/fusion.hpp"
#include "detkit/geometry.hpp"

namespace detkit {

/// One labeled box: the unit evaluation matches against.
struct GroundTruth {
  AbsBox box;
  int class_id = 0;
  std::string image_id;

  bool operator==(const GroundTruth&) const = default;
};

void validate_ground_truth(const GroundTruth& gt);

/// Outcome of one prediction after greedy matching.
struct PredictionMatch {
  double confidence = 0.0;
  int class_id = 0;
  bool is_true_positive = false;
  std::optional<std::size_t> matched_gt;  // index into the ground-truth list
};

/// Matching result for one image: predictions in rank order plus per-class
/// ground-truth counts. Each ground truth is matched by at most one
/// prediction.
struct MatchSet {
  std::vector<PredictionMatch> predictions;
  std::map<int, int> gt_count_by_class;
};

struct ClassAp {
  int class_id = 0;
  double ap = 0.0;
  int gt_count = 0;
  int prediction_count = 0;
};

enum class Interpolation { AllPoint, Voc11 };

const char* to_string(Interpolation interp) noexcept;
Interpolation interpolation_from_string(const std::string& name);

/// Per-class AP plus mAP at a fixed IoU threshold: the machine form of one
/// report-table row. map is the arithmetic mean of ap over classes with at
/// least one ground-truth instance.
struct EvalReport {
  double iou_threshold = 0.5;
  std::vector<ClassAp> per_class;
  double map = 0.0;
};

/// Builds a report from per-class results, computing the map field.
EvalReport make_eval_report(double iou_threshold, std::vector<ClassAp> per_class);

/// Mean of ap over classes with gt_count >= 1 (0 when there are none).
double mean_ap(const std::vector<ClassAp>& per_class) noexcept;

/// Greedy matcher for one image: predictions in descending confidence, each
/// matches the unmatched same-class ground truth of highest IoU when that
/// IoU >= iou_threshold, else counts as a false positive.
MatchSet match_predictions(const std::vector<Detection>& preds,
                           const std::vector<GroundTruth>& gts, double iou_threshold);

/// Area under the interpolated precision-recall curve for one class, from
/// the ranked true/false-positive flags. Throws NoGroundTruth when gt_count
/// is zero.
double average_precision(const std::vector<bool>& ranked_tp, int gt_count,
                         Interpolation interp = Interpolation::AllPoint);

/// Convenience overload reading one class out of a MatchSet.
double average_precision(const MatchSet& matches, int class_id,
                         Interpolation interp = Interpolation::AllPoint);

using PredictionsByImage = std::map<std::string, std::vector<Detection>>;
using GroundTruthByImage = std::map<std::string, std::vector<GroundTruth>>;

/// Full evaluation: per-class PR curves pooled over all images jointly, AP
/// per class, mAP over classes with ground truth. class_ids lists the
/// classes to report (empty = every class observed in the inputs).
EvalReport evaluate(const PredictionsByImage& preds, const GroundTruthByImage& gts,
                    double iou_threshold, const std::vector<int>& class_ids = {},
                    Interpolation interp = Interpolation::AllPoint);

/// Validation trajectory of one training run.
struct EpochSeries {
  std::vector<std::pair<int, EvalReport>> entries;  // strictly increasing epochs
};

/// Epoch whose report has the highest mAP; ties go to the earliest epoch.
int select_best_epoch(const EpochSeries& series);

}  // namespace detkit
