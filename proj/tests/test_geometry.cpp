#include "detkit/geometry.hpp"

#include <cmath>

#include "detkit/error.hpp"
#include "detkit/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace detkit;

TEST_CASE("iou fixtures") {
  const AbsBox unit{0, 0, 2, 2};
  CHECK(iou(unit, unit) == doctest::Approx(1.0));
  CHECK(iou(AbsBox{0, 0, 1, 1}, AbsBox{5, 5, 6, 6}) == 0.0);
  // intersection 1, union 7
  CHECK(iou(AbsBox{0, 0, 2, 2}, AbsBox{1, 1, 3, 3}) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("iou is total on zero-area boxes") {
  const AbsBox point{3, 3, 3, 3};
  CHECK(iou(point, point) == 0.0);  // zero union
  CHECK(iou(point, AbsBox{0, 0, 10, 10}) == 0.0);
  CHECK(iou(AbsBox{0, 0, 10, 10}, point) == 0.0);
  const AbsBox line{0, 0, 5, 0};
  CHECK(iou(line, AbsBox{0, 0, 5, 5}) == 0.0);
}

TEST_CASE("iou properties over random boxes") {
  RandomStream stream(101);
  for (int i = 0; i < 2000; ++i) {
    const AbsBox a = oracles::random_box(stream);
    const AbsBox b = oracles::random_box(stream);
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    const double s = stream.uniform(0.1, 10.0);
    const double dx = stream.uniform(-50.0, 50.0);
    const double dy = stream.uniform(-50.0, 50.0);
    const AbsBox as{a.x1 * s, a.y1 * s, a.x2 * s, a.y2 * s};
    const AbsBox bs{b.x1 * s, b.y1 * s, b.x2 * s, b.y2 * s};
    CHECK(iou(as, bs) == doctest::Approx(ab).epsilon(1e-9));
    const AbsBox at{a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy};
    const AbsBox bt{b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
    CHECK(iou(at, bt) == doctest::Approx(ab).epsilon(1e-9));
  }
}

TEST_CASE("to_absolute fixtures") {
  const AbsBox box = to_absolute(NormBox{0.5, 0.5, 0.1, 0.2}, ImageSize{640, 480});
  CHECK(box.x1 == doctest::Approx(288.0).epsilon(1e-12));
  CHECK(box.y1 == doctest::Approx(192.0).epsilon(1e-12));
  CHECK(box.x2 == doctest::Approx(352.0).epsilon(1e-12));
  CHECK(box.y2 == doctest::Approx(288.0).epsilon(1e-12));

  const AbsBox full = to_absolute(NormBox{0.5, 0.5, 1.0, 1.0}, ImageSize{100, 100});
  CHECK(full == AbsBox{0, 0, 100, 100});

  // corners beyond the frame clip to it
  const AbsBox clipped = to_absolute(NormBox{0.05, 0.5, 0.2, 0.2}, ImageSize{100, 100});
  CHECK(clipped.x1 == 0.0);
  CHECK(clipped.x2 == doctest::Approx(15.0));
}

TEST_CASE("to_normalized fixtures") {
  const NormBox norm = to_normalized(AbsBox{288, 192, 352, 288}, ImageSize{640, 480});
  CHECK(norm.cx == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(norm.cy == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(norm.w == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(norm.h == doctest::Approx(0.2).epsilon(1e-12));

  const NormBox full = to_normalized(AbsBox{0, 0, 100, 100}, ImageSize{100, 100});
  CHECK(full == NormBox{0.5, 0.5, 1.0, 1.0});

  CHECK_THROWS_WITH_AS(to_normalized(AbsBox{-5, 0, 10, 10}, ImageSize{100, 100}),
                       doctest::Contains("out-of-frame"), Error);
}

TEST_CASE("conversions invert each other on in-frame boxes") {
  RandomStream stream(7);
  const ImageSize size{640, 480};
  for (int i = 0; i < 2000; ++i) {
    // in-bounds normalized box: center margin keeps corners inside
    NormBox n;
    n.w = stream.uniform(0.01, 0.5);
    n.h = stream.uniform(0.01, 0.5);
    n.cx = stream.uniform(n.w / 2, 1.0 - n.w / 2);
    n.cy = stream.uniform(n.h / 2, 1.0 - n.h / 2);
    const NormBox round = to_normalized(to_absolute(n, size), size);
    CHECK(round.cx == doctest::Approx(n.cx).epsilon(1e-9));
    CHECK(round.cy == doctest::Approx(n.cy).epsilon(1e-9));
    CHECK(round.w == doctest::Approx(n.w).epsilon(1e-9));
    CHECK(round.h == doctest::Approx(n.h).epsilon(1e-9));
  }
}

TEST_CASE("validity predicates") {
  CHECK(is_valid(ImageSize{1, 1}));
  CHECK_FALSE(is_valid(ImageSize{0, 5}));
  CHECK(is_valid(AbsBox{0, 0, 0, 0}));
  CHECK_FALSE(is_valid(AbsBox{1, 0, 0, 0}));
  CHECK_FALSE(is_valid(AbsBox{0, 0, std::nan(""), 1}));
  CHECK(is_valid(NormBox{0.5, 0.5, 0.1, 0.1}));
  CHECK_FALSE(is_valid(NormBox{0.5, 0.5, 0.0, 0.1}));
  CHECK_FALSE(is_valid(NormBox{1.5, 0.5, 0.1, 0.1}));
}
