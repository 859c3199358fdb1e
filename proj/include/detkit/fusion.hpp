#pragma once

#include <map>
#include <string>
#include <vector>

#include "detkit/geometry.hpp"

namespace detkit {

/// One predicted box: the unit all fusion operates on. model_id tags the
/// source model ("" for single-model use).
struct Detection {
  AbsBox box;
  int class_id = 0;
  double confidence = 0.0;
  std::string model_id;

  bool operator==(const Detection&) const = default;
};

enum class FusionMethod { Nms, Wbf };

inline constexpr double kDefaultNmsIouThreshold = 0.45;
inline constexpr double kDefaultWbfIouThreshold = 0.55;

/// Parameters of one prediction-combination pass. model_weights empty means
/// equal weights; model_count is the number of models contributing boxes
/// (the N of the ensemble), used by the WBF confidence rescale.
struct FusionParams {
  FusionMethod method = FusionMethod::Nms;
  double iou_threshold = kDefaultNmsIouThreshold;
  double skip_confidence = 0.0;
  std::map<std::string, double> model_weights;
  int model_count = 1;
};

FusionParams default_nms_params();
FusionParams default_wbf_params(int model_count = 1);

/// Throws InvalidDetection unless the box is finite with positive area, the
/// confidence is in [0,1], and the class id is nonnegative. Registry
/// membership is checked at the io boundary, not here.
void validate_detection(const Detection& det);

/// Throws InvalidParams on out-of-domain thresholds, weights, or counts.
void validate_params(const FusionParams& params);

/// Ranking used everywhere a deterministic order over detections is needed:
/// descending confidence, ties broken by smaller x1, smaller y1, then
/// lexicographic model_id (remaining fields disambiguate exact overlaps).
bool detection_rank_before(const Detection& a, const Detection& b) noexcept;

/// Class-wise non-maximum suppression: within each class keeps the
/// highest-confidence box of every overlap group, suppressing boxes whose
/// IoU with an already-kept box of the same class exceeds iou_threshold.
/// Output is sorted by detection_rank_before.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

/// Weighted box fusion: replaces each same-class overlap cluster with the
/// confidence-weighted mean box. Steps, per class:
///   1. drop inputs with confidence < skip_confidence
///   2. scale each confidence by its model weight (weights normalized to
///      mean 1 over the weight map)
///   3. in descending confidence order, each box joins the existing cluster
///      whose running fused box has maximal IoU with it when that IoU
///      exceeds iou_threshold, else starts a new cluster
///   4. fused coordinates are confidence-weighted means of the members
///   5. fused confidence is the member mean rescaled by
///      min(cluster_size, model_count) / model_count, capped at 1
std::vector<Detection> wbf(std::vector<Detection> dets, const FusionParams& params);

/// Dispatches to nms or wbf according to params.method.
std::vector<Detection> combine(std::vector<Detection> dets, const FusionParams& params);

}  // namespace detkit
