#include "detkit/geometry.hpp"

#include <algorithm>
#include <sstream>

#include "detkit/error.hpp"

namespace detkit {

bool is_valid(ImageSize size) noexcept { return size.width >= 1 && size.height >= 1; }

bool is_valid(const AbsBox& box) noexcept {
  return std::isfinite(box.x1) && std::isfinite(box.y1) && std::isfinite(box.x2) &&
         std::isfinite(box.y2) && box.x1 <= box.x2 && box.y1 <= box.y2;
}

bool is_valid(const NormBox& box) noexcept {
  return std::isfinite(box.cx) && std::isfinite(box.cy) && std::isfinite(box.w) &&
         std::isfinite(box.h) && box.cx >= 0.0 && box.cx <= 1.0 && box.cy >= 0.0 &&
         box.cy <= 1.0 && box.w > 0.0 && box.w <= 1.0 && box.h > 0.0 && box.h <= 1.0;
}

double iou(const AbsBox& a, const AbsBox& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = std::max(0.0, iw) * std::max(0.0, ih);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

AbsBox to_absolute(const NormBox& box, ImageSize size) noexcept {
  const double w = static_cast<double>(size.width);
  const double h = static_cast<double>(size.height);
  AbsBox out{(box.cx - box.w / 2.0) * w, (box.cy - box.h / 2.0) * h,
             (box.cx + box.w / 2.0) * w, (box.cy + box.h / 2.0) * h};
  out.x1 = std::clamp(out.x1, 0.0, w);
  out.x2 = std::clamp(out.x2, 0.0, w);
  out.y1 = std::clamp(out.y1, 0.0, h);
  out.y2 = std::clamp(out.y2, 0.0, h);
  return out;
}

NormBox to_normalized(const AbsBox& box, ImageSize size) {
  constexpr double kTol = 1e-6;
  const double w = static_cast<double>(size.width);
  const double h = static_cast<double>(size.height);
  if (box.x1 < -kTol || box.y1 < -kTol || box.x2 > w + kTol || box.y2 > h + kTol) {
    std::ostringstream msg;
    msg << "box (" << box.x1 << "," << box.y1 << "," << box.x2 << "," << box.y2
        << ") extends beyond " << size.width << "x" << size.height << " frame";
    fail(ErrorKind::OutOfFrame, msg.str());
  }
  return NormBox{(box.x1 + box.x2) / 2.0 / w, (box.y1 + box.y2) / 2.0 / h,
                 (box.x2 - box.x1) / w, (box.y2 - box.y1) / h};
}

}  // namespace detkit
