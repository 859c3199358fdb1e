#include "detkit/fusion.hpp"

#include <algorithm>
#include <sstream>

#include "detkit/error.hpp"

namespace detkit {

FusionParams default_nms_params() {
  return FusionParams{FusionMethod::Nms, kDefaultNmsIouThreshold, 0.0, {}, 1};
}

FusionParams default_wbf_params(int model_count) {
  return FusionParams{FusionMethod::Wbf, kDefaultWbfIouThreshold, 0.0, {}, model_count};
}

void validate_detection(const Detection& det) {
  if (!is_valid(det.box) || det.box.area() <= 0.0) {
    std::ostringstream msg;
    msg << "box (" << det.box.x1 << "," << det.box.y1 << "," << det.box.x2 << ","
        << det.box.y2 << ") must be finite with positive area";
    fail(ErrorKind::InvalidDetection, msg.str());
  }
  if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
    fail(ErrorKind::InvalidDetection,
         "confidence " + std::to_string(det.confidence) + " outside [0,1]");
  }
  if (det.class_id < 0) {
    fail(ErrorKind::InvalidDetection, "negative class id " + std::to_string(det.class_id));
  }
}

void validate_params(const FusionParams& params) {
  if (!(params.iou_threshold > 0.0 && params.iou_threshold < 1.0)) {
    fail(ErrorKind::InvalidParams,
         "iou_threshold " + std::to_string(params.iou_threshold) + " outside (0,1)");
  }
  if (!(params.skip_confidence >= 0.0 && params.skip_confidence <= 1.0)) {
    fail(ErrorKind::InvalidParams, "skip_confidence outside [0,1]");
  }
  if (params.model_count < 1) {
    fail(ErrorKind::InvalidParams, "model_count must be >= 1");
  }
  for (const auto& [id, weight] : params.model_weights) {
    if (!(weight > 0.0)) {
      fail(ErrorKind::InvalidParams, "model weight for '" + id + "' must be positive");
    }
  }
}

bool detection_rank_before(const Detection& a, const Detection& b) noexcept {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.box.x1 != b.box.x1) return a.box.x1 < b.box.x1;
  if (a.box.y1 != b.box.y1) return a.box.y1 < b.box.y1;
  if (a.model_id != b.model_id) return a.model_id < b.model_id;
  if (a.box.x2 != b.box.x2) return a.box.x2 < b.box.x2;
  if (a.box.y2 != b.box.y2) return a.box.y2 < b.box.y2;
  return a.class_id < b.class_id;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    fail(ErrorKind::InvalidParams,
         "iou_threshold " + std::to_string(iou_threshold) + " outside (0,1)");
  }
  for (const Detection& det : dets) validate_detection(det);

  std::sort(dets.begin(), dets.end(), detection_rank_before);
  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (const Detection& det : dets) {
    bool suppressed = false;
    for (const Detection& winner : kept) {
      if (winner.class_id == det.class_id && iou(winner.box, det.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(det);
  }
  return kept;
}

namespace {

struct WeightedDet {
  Detection det;
  double wconf = 0.0;
};

struct Cluster {
  int class_id = 0;
  AbsBox fused;
  double conf_sum = 0.0;
  double x1_sum = 0.0;
  double y1_sum = 0.0;
  double x2_sum = 0.0;
  double y2_sum = 0.0;
  int count = 0;
  Detection top;  // highest-confidence member; carries the output model_id

  void add(const WeightedDet& item) {
    if (count == 0) top = item.det;
    conf_sum += item.wconf;
    x1_sum += item.wconf * item.det.box.x1;
    y1_sum += item.wconf * item.det.box.y1;
    x2_sum += item.wconf * item.det.box.x2;
    y2_sum += item.wconf * item.det.box.y2;
    ++count;
    // Singleton clusters keep the member box bit-exactly; the weighted mean
    // only kicks in once a second member joins.
    fused = count == 1 ? item.det.box
                       : AbsBox{x1_sum / conf_sum, y1_sum / conf_sum, x2_sum / conf_sum,
                                y2_sum / conf_sum};
  }
};

}  // namespace

std::vector<Detection> wbf(std::vector<Detection> dets, const FusionParams& params) {
  validate_params(params);
  for (const Detection& det : dets) validate_detection(det);

  double weight_mean = 1.0;
  if (!params.model_weights.empty()) {
    double sum = 0.0;
    for (const auto& [id, weight] : params.model_weights) sum += weight;
    weight_mean = sum / static_cast<double>(params.model_weights.size());
  }

  std::vector<WeightedDet> pool;
  pool.reserve(dets.size());
  for (Detection& det : dets) {
    if (det.confidence < params.skip_confidence) continue;
    double factor = 1.0;
    if (!params.model_weights.empty()) {
      auto it = params.model_weights.find(det.model_id);
      if (it == params.model_weights.end()) {
        fail(ErrorKind::UnknownModel, "no weight for model '" + det.model_id + "'");
      }
      factor = it->second / weight_mean;
    }
    const double wconf = det.confidence * factor;
    pool.push_back(WeightedDet{std::move(det), wconf});
  }

  std::sort(pool.begin(), pool.end(), [](const WeightedDet& a, const WeightedDet& b) {
    if (a.wconf != b.wconf) return a.wconf > b.wconf;
    if (a.det.box.x1 != b.det.box.x1) return a.det.box.x1 < b.det.box.x1;
    if (a.det.box.y1 != b.det.box.y1) return a.det.box.y1 < b.det.box.y1;
    if (a.det.model_id != b.det.model_id) return a.det.model_id < b.det.model_id;
    if (a.det.box.x2 != b.det.box.x2) return a.det.box.x2 < b.det.box.x2;
    if (a.det.box.y2 != b.det.box.y2) return a.det.box.y2 < b.det.box.y2;
    return a.det.class_id < b.det.class_id;
  });

  std::vector<Cluster> clusters;
  for (const WeightedDet& item : pool) {
    double best_iou = params.iou_threshold;
    int best = -1;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (clusters[i].class_id != item.det.class_id) continue;
      const double overlap = iou(clusters[i].fused, item.det.box);
      if (overlap > best_iou) {
        best_iou = overlap;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) {
      Cluster cluster;
      cluster.class_id = item.det.class_id;
      cluster.add(item);
      clusters.push_back(std::move(cluster));
    } else {
      clusters[static_cast<std::size_t>(best)].add(item);
    }
  }

  const double models = static_cast<double>(params.model_count);
  std::vector<Detection> out;
  out.reserve(clusters.size());
  for (const Cluster& cluster : clusters) {
    const double mean = cluster.conf_sum / static_cast<double>(cluster.count);
    const double rescale = std::min<double>(cluster.count, models) / models;
    Detection det = cluster.top;
    det.box = cluster.fused;
    det.confidence = std::min(1.0, mean * rescale);
    out.push_back(std::move(det));
  }
  std::sort(out.begin(), out.end(), detection_rank_before);
  return out;
}

std::vector<Detection> combine(std::vector<Detection> dets, const FusionParams& params) {
  if (params.method == FusionMethod::Nms) return nms(std::move(dets), params.iou_threshold);
  return wbf(std::move(dets), params);
}

}  // namespace detkit
