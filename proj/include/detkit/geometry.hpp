#pragma once

#include <cmath>

namespace detkit {

/// Pixel dimensions of an image frame.
struct ImageSize {
  int width = 0;
  int height = 0;

  bool operator==(const ImageSize&) const = default;
};

bool is_valid(ImageSize size) noexcept;

/// Axis-aligned box in absolute pixel coordinates, corners (x1,y1)-(x2,y2).
/// Half-open real intervals: area = (x2-x1)*(y2-y1), no +1 pixel convention.
struct AbsBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }

  bool operator==(const AbsBox&) const = default;
};

/// Box as fractions of the image frame: center (cx,cy) plus size (w,h),
/// all in [0,1]. The on-disk label coordinate system.
struct NormBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const NormBox&) const = default;
};

bool is_valid(const AbsBox& box) noexcept;
bool is_valid(const NormBox& box) noexcept;

/// Intersection over union of two boxes. Total on all valid boxes:
/// zero-area inputs and a zero-area union both yield 0.
double iou(const AbsBox& a, const AbsBox& b) noexcept;

/// Converts a normalized box to absolute pixels, clipping the result to
/// [0,width] x [0,height].
AbsBox to_absolute(const NormBox& box, ImageSize size) noexcept;

/// Inverse of to_absolute for in-frame boxes. Throws OutOfFrame when the
/// box extends beyond the image by more than 1e-6 pixels.
NormBox to_normalized(const AbsBox& box, ImageSize size);

}  // namespace detkit
