#include "detkit/fusion.hpp"

#include <algorithm>

#include "detkit/error.hpp"
#include "detkit/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace detkit;

namespace {

Detection det(double x1, double y1, double x2, double y2, double conf, int cls = 0,
              std::string model = "") {
  return Detection{AbsBox{x1, y1, x2, y2}, cls, conf, std::move(model)};
}

bool same_detections(const std::vector<Detection>& a, const std::vector<Detection>& b,
                     double tol = 0.0) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].class_id != b[i].class_id || a[i].model_id != b[i].model_id) return false;
    for (double d : {a[i].box.x1 - b[i].box.x1, a[i].box.y1 - b[i].box.y1,
                     a[i].box.x2 - b[i].box.x2, a[i].box.y2 - b[i].box.y2,
                     a[i].confidence - b[i].confidence}) {
      if (std::abs(d) > tol) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("nms keeps the highest-confidence box of an overlap pair") {
  // IoU = 81/119 ~ 0.68 > 0.5
  const auto kept = nms({det(0, 0, 10, 10, 0.9), det(1, 1, 11, 11, 0.8)}, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].confidence == 0.9);
}

TEST_CASE("nms leaves a single detection unchanged") {
  const auto input = det(3, 4, 9, 12, 0.42, 2, "m");
  const auto kept = nms({input}, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0] == input);
}

TEST_CASE("nms never suppresses across classes") {
  const auto kept = nms({det(0, 0, 10, 10, 0.9, 0), det(1, 1, 11, 11, 0.8, 1)}, 0.5);
  CHECK(kept.size() == 2);
}

TEST_CASE("nms validates inputs") {
  CHECK_THROWS_AS(nms({det(0, 0, 10, 10, 1.5)}, 0.5), Error);
  CHECK_THROWS_AS(nms({det(5, 5, 5, 9, 0.5)}, 0.5), Error);  // zero width
  CHECK_THROWS_AS(nms({det(0, 0, 1, 1, 0.5, -1)}, 0.5), Error);
  CHECK_THROWS_AS(nms({det(0, 0, 1, 1, 0.5)}, 0.0), Error);
  CHECK_THROWS_AS(nms({det(0, 0, 1, 1, 0.5)}, 1.0), Error);
}

TEST_CASE("nms matches the brute-force reference and is idempotent") {
  RandomStream stream(2024);
  for (int round = 0; round < 400; ++round) {
    const auto dets = oracles::random_detections(stream, 50, 5);
    const double threshold = stream.uniform(0.2, 0.8);
    const auto kept = nms(dets, threshold);
    CHECK(same_detections(kept, oracles::brute_nms(dets, threshold)));
    CHECK(same_detections(nms(kept, threshold), kept));

    // permutation invariance
    auto shuffled = dets;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[stream.index(i)]);
    }
    CHECK(same_detections(nms(shuffled, threshold), kept));
  }
}

TEST_CASE("nms keeps the per-class confidence maximum") {
  RandomStream stream(55);
  for (int round = 0; round < 200; ++round) {
    const auto dets = oracles::random_detections(stream, 30, 3);
    const auto kept = nms(dets, 0.5);
    for (int cls = 0; cls < 3; ++cls) {
      double best = -1.0;
      for (const Detection& d : dets) {
        if (d.class_id == cls) best = std::max(best, d.confidence);
      }
      if (best < 0) continue;
      bool found = false;
      for (const Detection& d : kept) {
        if (d.class_id == cls && d.confidence == best) found = true;
      }
      CHECK(found);
    }
  }
}

TEST_CASE("wbf fuses the hand-computed two-model cluster") {
  FusionParams params = default_wbf_params(2);
  params.iou_threshold = 0.4;
  const auto fused =
      wbf({det(0, 0, 10, 10, 0.6, 0, "a"), det(2, 2, 12, 12, 0.2, 0, "b")}, params);
  REQUIRE(fused.size() == 1);
  CHECK(fused[0].box.x1 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fused[0].box.y1 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fused[0].box.x2 == doctest::Approx(10.5).epsilon(1e-9));
  CHECK(fused[0].box.y2 == doctest::Approx(10.5).epsilon(1e-9));
  CHECK(fused[0].confidence == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(fused[0].model_id == "a");

  // at threshold 0.55 the pair (IoU ~ 0.47) stays split
  params.iou_threshold = 0.55;
  CHECK(wbf({det(0, 0, 10, 10, 0.6, 0, "a"), det(2, 2, 12, 12, 0.2, 0, "b")}, params).size() ==
        2);
}

TEST_CASE("wbf with one model and disjoint boxes is the identity") {
  const std::vector<Detection> input = {det(0, 0, 10, 10, 0.9, 0, "m"),
                                        det(50, 50, 60, 60, 0.4, 1, "m"),
                                        det(20, 20, 30, 30, 0.7, 0, "m")};
  auto sorted = input;
  std::sort(sorted.begin(), sorted.end(), detection_rank_before);
  const auto fused = wbf(input, default_wbf_params(1));
  REQUIRE(fused.size() == input.size());
  for (std::size_t i = 0; i < fused.size(); ++i) CHECK(fused[i] == sorted[i]);
}

TEST_CASE("wbf rescales lone boxes by the model count") {
  FusionParams params = default_wbf_params(3);
  const auto fused = wbf({det(10, 10, 20, 20, 0.9, 0, "a")}, params);
  REQUIRE(fused.size() == 1);
  CHECK(fused[0].box == AbsBox{10, 10, 20, 20});
  CHECK(fused[0].confidence == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("wbf drops inputs below the skip confidence") {
  FusionParams params = default_wbf_params(1);
  params.skip_confidence = 0.5;
  const auto fused = wbf({det(0, 0, 10, 10, 0.4), det(30, 30, 40, 40, 0.6)}, params);
  REQUIRE(fused.size() == 1);
  CHECK(fused[0].confidence == 0.6);
}

TEST_CASE("wbf rejects detections from models without weights") {
  FusionParams params = default_wbf_params(2);
  params.model_weights = {{"a", 1.0}};
  CHECK_THROWS_WITH_AS(wbf({det(0, 0, 10, 10, 0.5, 0, "b")}, params),
                       doctest::Contains("unknown-model"), Error);
}

TEST_CASE("wbf matches a straightforward reimplementation") {
  RandomStream stream(4096);
  for (int round = 0; round < 250; ++round) {
    const int models = 1 + static_cast<int>(stream.index(3));
    auto dets = oracles::random_detections(stream, 40, 4, models);
    FusionParams params;
    params.method = FusionMethod::Wbf;
    params.iou_threshold = stream.uniform(0.3, 0.7);
    params.skip_confidence = stream.uniform(0.0, 0.2);
    params.model_count = models;
    if (stream.uniform() < 0.5) {
      for (int m = 0; m < models; ++m) {
        params.model_weights["m" + std::to_string(m)] = stream.uniform(0.5, 3.0);
      }
    }
    const auto fused = wbf(dets, params);
    const auto reference = oracles::naive_wbf(dets, params);
    CHECK(same_detections(fused, reference, 1e-9));
  }
}

TEST_CASE("wbf fused boxes stay in the member envelope") {
  RandomStream stream(9001);
  for (int round = 0; round < 200; ++round) {
    const auto dets = oracles::random_detections(stream, 30, 3, 2);
    FusionParams params = default_wbf_params(2);
    const auto fused = wbf(dets, params);
    for (const Detection& f : fused) {
      double min_x1 = 1e18, min_y1 = 1e18, max_x2 = -1e18, max_y2 = -1e18;
      double max_wconf = 0.0;
      for (const Detection& d : dets) {
        if (d.class_id != f.class_id) continue;
        min_x1 = std::min(min_x1, d.box.x1);
        min_y1 = std::min(min_y1, d.box.y1);
        max_x2 = std::max(max_x2, d.box.x2);
        max_y2 = std::max(max_y2, d.box.y2);
        max_wconf = std::max(max_wconf, d.confidence);
      }
      CHECK(f.box.x1 >= min_x1 - 1e-9);
      CHECK(f.box.y1 >= min_y1 - 1e-9);
      CHECK(f.box.x2 <= max_x2 + 1e-9);
      CHECK(f.box.y2 <= max_y2 + 1e-9);
      CHECK(f.confidence <= max_wconf + 1e-9);  // equal weights: wconf = conf
    }
  }
}

TEST_CASE("fusion preserves classes") {
  RandomStream stream(77);
  for (int round = 0; round < 100; ++round) {
    const auto dets = oracles::random_detections(stream, 25, 4, 2);
    std::array<int, 4> in_counts{};
    for (const Detection& d : dets) in_counts[static_cast<std::size_t>(d.class_id)]++;
    for (const auto& fused : {nms(dets, 0.5), wbf(dets, default_wbf_params(2))}) {
      for (const Detection& f : fused) {
        CHECK(in_counts[static_cast<std::size_t>(f.class_id)] > 0);
      }
    }
  }
}

TEST_CASE("combine dispatches on the method") {
  const std::vector<Detection> dets = {det(0, 0, 10, 10, 0.9), det(1, 1, 11, 11, 0.8)};
  FusionParams params = default_nms_params();
  CHECK(same_detections(combine(dets, params), nms(dets, params.iou_threshold)));
  params = default_wbf_params(1);
  CHECK(same_detections(combine(dets, params), wbf(dets, params)));
  CHECK(combine({}, default_nms_params()).empty());
  CHECK(combine({}, default_wbf_params(1)).empty());
}
