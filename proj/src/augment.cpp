#include "detkit/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "detkit/error.hpp"
#include "detkit/rng.hpp"
#include "detkit/util.hpp"

namespace detkit {

namespace {

constexpr std::uint8_t kFillGray = 114;
constexpr double kMinBoxSidePx = 2.0;
constexpr double kMinAreaRatio = 0.1;
constexpr double kMaxAspect = 20.0;

// Degree-exact trig: right-angle multiples map integer corners to integer
// corners with no rounding residue.
double cos_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0) r += 360.0;
  if (r == 0.0) return 1.0;
  if (r == 90.0 || r == 270.0) return 0.0;
  if (r == 180.0) return -1.0;
  return std::cos(deg * std::numbers::pi / 180.0);
}

double sin_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0) r += 360.0;
  if (r == 0.0 || r == 180.0) return 0.0;
  if (r == 90.0) return 1.0;
  if (r == 270.0) return -1.0;
  return std::sin(deg * std::numbers::pi / 180.0);
}

double tan_deg(double deg) { return sin_deg(deg) / cos_deg(deg); }

struct Affine2d {
  // x' = a*x + b*y + tx ; y' = c*x + d*y + ty
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0, tx = 0.0, ty = 0.0;

  std::pair<double, double> apply(double x, double y) const noexcept {
    return {a * x + b * y + tx, c * x + d * y + ty};
  }
  double det() const noexcept { return a * d - b * c; }
  Affine2d inverse() const {
    const double dt = det();
    Affine2d inv;
    inv.a = d / dt;
    inv.b = -b / dt;
    inv.c = -c / dt;
    inv.d = a / dt;
    inv.tx = -(inv.a * tx + inv.b * ty);
    inv.ty = -(inv.c * tx + inv.d * ty);
    return inv;
  }
};

Affine2d build_affine(const AffineDraws& draws, int width, int height) {
  const double cx = width * 0.5;
  const double cy = height * 0.5;
  const double cs = cos_deg(draws.rotate_deg) * draws.scale;
  const double sn = sin_deg(draws.rotate_deg) * draws.scale;
  const double shx = tan_deg(draws.shear_x_deg);
  const double shy = tan_deg(draws.shear_y_deg);

  // rotate+scale then shear: L = SH * RS
  Affine2d m;
  m.a = cs + shx * sn;
  m.b = -sn + shx * cs;
  m.c = shy * cs + sn;
  m.d = -shy * sn + cs;
  // full map: p -> L*(p - c) + c + t
  const double tx = draws.translate_x * width;
  const double ty = draws.translate_y * height;
  m.tx = cx + tx - (m.a * cx + m.b * cy);
  m.ty = cy + ty - (m.c * cx + m.d * cy);
  return m;
}

std::uint8_t sample_nearest(const ImageBuffer& src, double x, double y, int channel) {
  const int sx = static_cast<int>(std::floor(x));
  const int sy = static_cast<int>(std::floor(y));
  if (!src.in_bounds(sx, sy)) return kFillGray;
  return src.pixel(sx, sy)[channel];
}

std::uint8_t sample_bilinear(const ImageBuffer& src, double x, double y, int channel) {
  const double fx = x - 0.5;
  const double fy = y - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double wx = fx - x0;
  const double wy = fy - y0;
  auto at = [&](int px, int py) -> double {
    if (!src.in_bounds(px, py)) return kFillGray;
    return src.pixel(px, py)[channel];
  };
  const double top = at(x0, y0) * (1.0 - wx) + at(x0 + 1, y0) * wx;
  const double bottom = at(x0, y0 + 1) * (1.0 - wx) + at(x0 + 1, y0 + 1) * wx;
  const double value = top * (1.0 - wy) + bottom * wy;
  return static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
}

}  // namespace

const char* to_string(AugmentKind kind) noexcept {
  switch (kind) {
    case AugmentKind::VFlip: return "vflip";
    case AugmentKind::HFlip: return "hflip";
    case AugmentKind::Scale: return "scale";
    case AugmentKind::Translate: return "translate";
    case AugmentKind::Rotate: return "rotate";
    case AugmentKind::Shear: return "shear";
    case AugmentKind::HsvJitter: return "hsv";
    case AugmentKind::Mosaic: return "mosaic";
  }
  return "unknown";
}

AugmentKind augment_kind_from_string(const std::string& name) {
  if (name == "vflip") return AugmentKind::VFlip;
  if (name == "hflip") return AugmentKind::HFlip;
  if (name == "scale") return AugmentKind::Scale;
  if (name == "translate") return AugmentKind::Translate;
  if (name == "rotate" || name == "angle") return AugmentKind::Rotate;
  if (name == "shear") return AugmentKind::Shear;
  if (name == "hsv") return AugmentKind::HsvJitter;
  if (name == "mosaic") return AugmentKind::Mosaic;
  fail(ErrorKind::InvalidParams, "unknown augmentation kind '" + name + "'");
}

void validate_op(const AugmentOp& op) {
  if (!(op.probability >= 0.0 && op.probability <= 1.0)) {
    fail(ErrorKind::InvalidParams, "probability outside [0,1]");
  }
  if (!std::isfinite(op.magnitude) || op.magnitude < 0.0) {
    fail(ErrorKind::InvalidParams, "magnitude must be finite and nonnegative");
  }
  switch (op.kind) {
    case AugmentKind::Rotate:
    case AugmentKind::Shear:
      if (op.magnitude > 180.0) fail(ErrorKind::InvalidParams, "degrees outside [0,180]");
      break;
    case AugmentKind::Scale:
      if (op.magnitude >= 1.0) {
        fail(ErrorKind::InvalidParams, "scale gain must be < 1 so the factor stays positive");
      }
      break;
    case AugmentKind::HsvJitter:
      for (double gain : {op.hsv_gain_h, op.hsv_gain_s, op.hsv_gain_v}) {
        if (!(gain >= 0.0 && gain <= 1.0)) {
          fail(ErrorKind::InvalidParams, "hsv gains must lie in [0,1]");
        }
      }
      break;
    default:
      break;
  }
}

LabeledImage flip(const LabeledImage& input, FlipAxis axis) {
  LabeledImage out = input;
  const int w = input.image.width;
  const int h = input.image.height;
  if (axis == FlipAxis::Vertical) {
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* src = input.image.pixel(0, h - 1 - y);
      std::copy(src, src + static_cast<std::size_t>(w) * 3, out.image.pixel(0, y));
    }
    for (BoxLabel& label : out.labels) label.box.cy = 1.0 - label.box.cy;
  } else {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::uint8_t* src = input.image.pixel(w - 1 - x, y);
        std::uint8_t* dst = out.image.pixel(x, y);
        dst[0] = src[0];
        dst[1] = src[1];
        dst[2] = src[2];
      }
    }
    for (BoxLabel& label : out.labels) label.box.cx = 1.0 - label.box.cx;
  }
  return out;
}

LabeledImage affine(const LabeledImage& input, const AffineDraws& draws, Resample resample) {
  if (draws.scale == 1.0 && draws.rotate_deg == 0.0 && draws.shear_x_deg == 0.0 &&
      draws.shear_y_deg == 0.0 && draws.translate_x == 0.0 && draws.translate_y == 0.0) {
    return input;
  }

  const int w = input.image.width;
  const int h = input.image.height;
  const Affine2d fwd = build_affine(draws, w, h);
  if (std::abs(fwd.det()) < 1e-8) {
    fail(ErrorKind::DegenerateTransform, "affine determinant below 1e-8");
  }
  const Affine2d inv = fwd.inverse();

  LabeledImage out;
  out.image_id = input.image_id;
  out.image = ImageBuffer::filled(w, h, kFillGray);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto [sx, sy] = inv.apply(x + 0.5, y + 0.5);
      std::uint8_t* dst = out.image.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        dst[ch] = resample == Resample::Nearest ? sample_nearest(input.image, sx, sy, ch)
                                                : sample_bilinear(input.image, sx, sy, ch);
      }
    }
  }

  const ImageSize size{w, h};
  for (const BoxLabel& label : input.labels) {
    const AbsBox src = to_absolute(label.box, size);
    const std::array<std::pair<double, double>, 4> corners = {
        fwd.apply(src.x1, src.y1), fwd.apply(src.x2, src.y1), fwd.apply(src.x1, src.y2),
        fwd.apply(src.x2, src.y2)};
    AbsBox hull{corners[0].first, corners[0].second, corners[0].first, corners[0].second};
    for (const auto& [px, py] : corners) {
      hull.x1 = std::min(hull.x1, px);
      hull.y1 = std::min(hull.y1, py);
      hull.x2 = std::max(hull.x2, px);
      hull.y2 = std::max(hull.y2, py);
    }
    AbsBox clipped{std::clamp(hull.x1, 0.0, static_cast<double>(w)),
                   std::clamp(hull.y1, 0.0, static_cast<double>(h)),
                   std::clamp(hull.x2, 0.0, static_cast<double>(w)),
                   std::clamp(hull.y2, 0.0, static_cast<double>(h))};
    const double bw = clipped.width();
    const double bh = clipped.height();
    if (bw <= kMinBoxSidePx || bh <= kMinBoxSidePx) continue;
    if (clipped.area() / src.area() <= kMinAreaRatio) continue;
    if (std::max(bw / bh, bh / bw) >= kMaxAspect) continue;
    out.labels.push_back(BoxLabel{label.class_id, to_normalized(clipped, size)});
  }
  return out;
}

namespace {

struct Hsv {
  double h;  // [0,360)
  double s;  // [0,1]
  double v;  // [0,255]
};

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out{0.0, 0.0, mx};
  if (delta > 0.0) {
    if (mx == r) {
      out.h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      out.h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      out.h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (out.h < 0.0) out.h += 360.0;
  }
  if (mx > 0.0) out.s = delta / mx;
  return out;
}

std::array<double, 3> hsv_to_rgb(const Hsv& hsv) {
  const double c = hsv.v * hsv.s;
  const double hp = hsv.h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0.0, g = 0.0, b = 0.0;
  if (hp < 1.0) {
    r = c; g = x;
  } else if (hp < 2.0) {
    r = x; g = c;
  } else if (hp < 3.0) {
    g = c; b = x;
  } else if (hp < 4.0) {
    g = x; b = c;
  } else if (hp < 5.0) {
    r = x; b = c;
  } else {
    r = c; b = x;
  }
  const double m = hsv.v - c;
  return {r + m, g + m, b + m};
}

}  // namespace

LabeledImage hsv_jitter(const LabeledImage& input, double gain_h, double gain_s,
                        double gain_v, const HsvDraws& draws) {
  for (double gain : {gain_h, gain_s, gain_v}) {
    if (!(gain >= 0.0 && gain <= 1.0)) fail(ErrorKind::InvalidParams, "hsv gain outside [0,1]");
  }
  const double mh = 1.0 + draws.h * gain_h;
  const double ms = 1.0 + draws.s * gain_s;
  const double mv = 1.0 + draws.v * gain_v;
  if (mh == 1.0 && ms == 1.0 && mv == 1.0) return input;

  LabeledImage out = input;
  const std::size_t pixels = static_cast<std::size_t>(input.image.width) * input.image.height;
  for (std::size_t i = 0; i < pixels; ++i) {
    std::uint8_t* px = out.image.data.data() + i * 3;
    Hsv hsv = rgb_to_hsv(px[0], px[1], px[2]);
    hsv.h = std::fmod(hsv.h * mh, 360.0);
    hsv.s = std::clamp(hsv.s * ms, 0.0, 1.0);
    hsv.v = std::clamp(hsv.v * mv, 0.0, 255.0);
    const auto [r, g, b] = hsv_to_rgb(hsv);
    px[0] = static_cast<std::uint8_t>(std::lround(std::clamp(r, 0.0, 255.0)));
    px[1] = static_cast<std::uint8_t>(std::lround(std::clamp(g, 0.0, 255.0)));
    px[2] = static_cast<std::uint8_t>(std::lround(std::clamp(b, 0.0, 255.0)));
  }
  return out;
}

namespace {

void paste_quadrant(ImageBuffer& canvas, const LabeledImage& src, int ox, int oy,
                    std::vector<BoxLabel>& labels_out) {
  const int w = src.image.width;
  const int h = src.image.height;
  // Visible region: placed extent clipped to the canvas.
  const int x_begin = std::max(0, ox);
  const int y_begin = std::max(0, oy);
  const int x_end = std::min(canvas.width, ox + w);
  const int y_end = std::min(canvas.height, oy + h);
  for (int y = y_begin; y < y_end; ++y) {
    const std::uint8_t* row = src.image.pixel(x_begin - ox, y - oy);
    std::copy(row, row + static_cast<std::size_t>(x_end - x_begin) * 3, canvas.pixel(x_begin, y));
  }

  const ImageSize src_size{w, h};
  const ImageSize canvas_size{canvas.width, canvas.height};
  const double rx1 = x_begin;
  const double ry1 = y_begin;
  const double rx2 = x_end;
  const double ry2 = y_end;
  for (const BoxLabel& label : src.labels) {
    const AbsBox abs = to_absolute(label.box, src_size);
    AbsBox placed{abs.x1 + ox, abs.y1 + oy, abs.x2 + ox, abs.y2 + oy};
    AbsBox clipped{std::clamp(placed.x1, rx1, rx2), std::clamp(placed.y1, ry1, ry2),
                   std::clamp(placed.x2, rx1, rx2), std::clamp(placed.y2, ry1, ry2)};
    if (clipped.width() <= 0.0 || clipped.height() <= 0.0) continue;
    labels_out.push_back(BoxLabel{label.class_id, to_normalized(clipped, canvas_size)});
  }
}

}  // namespace

LabeledImage mosaic(const LabeledImage& top_left, const LabeledImage& top_right,
                    const LabeledImage& bottom_left, const LabeledImage& bottom_right,
                    double center_x, double center_y) {
  const int w = top_left.image.width;
  const int h = top_left.image.height;
  for (const LabeledImage* img : {&top_right, &bottom_left, &bottom_right}) {
    if (img->image.width != w || img->image.height != h) {
      fail(ErrorKind::SizeMismatch, "mosaic inputs must share one size");
    }
  }
  if (center_x < 0.5 * w || center_x > 1.5 * w || center_y < 0.5 * h || center_y > 1.5 * h) {
    fail(ErrorKind::InvalidParams, "mosaic center outside the allowed band");
  }

  // Quadrants meet at the center rounded to a pixel boundary and tile the
  // canvas without seams or overlap.
  const int mx = static_cast<int>(std::lround(center_x));
  const int my = static_cast<int>(std::lround(center_y));

  LabeledImage out;
  out.image_id = top_left.image_id;
  out.image = ImageBuffer::filled(2 * w, 2 * h, kFillGray);
  paste_quadrant(out.image, top_left, mx - w, my - h, out.labels);
  paste_quadrant(out.image, top_right, mx, my - h, out.labels);
  paste_quadrant(out.image, bottom_left, mx - w, my, out.labels);
  paste_quadrant(out.image, bottom_right, mx, my, out.labels);
  return out;
}

LabeledImage augment_image(const LabeledImage& input, const AugmentPipeline& pipeline,
                           std::span<const LabeledImage> partner_pool, Resample resample) {
  for (const AugmentOp& op : pipeline.ops) validate_op(op);

  // Partner draws address the pool in image_id order, never in caller order.
  std::vector<const LabeledImage*> partners;
  partners.reserve(partner_pool.size());
  for (const LabeledImage& img : partner_pool) partners.push_back(&img);
  std::sort(partners.begin(), partners.end(),
            [](const LabeledImage* a, const LabeledImage* b) {
              return a->image_id < b->image_id;
            });

  RandomStream stream = RandomStream::for_image(pipeline.seed, input.image_id);
  LabeledImage current = input;
  for (const AugmentOp& op : pipeline.ops) {
    const double fire = stream.uniform();
    if (fire >= op.probability) continue;
    switch (op.kind) {
      case AugmentKind::VFlip:
        current = flip(current, FlipAxis::Vertical);
        break;
      case AugmentKind::HFlip:
        current = flip(current, FlipAxis::Horizontal);
        break;
      case AugmentKind::Scale: {
        AffineDraws draws;
        draws.scale = 1.0 + stream.uniform(-op.magnitude, op.magnitude);
        current = affine(current, draws, resample);
        break;
      }
      case AugmentKind::Translate: {
        AffineDraws draws;
        draws.translate_x = stream.uniform(-op.magnitude, op.magnitude);
        draws.translate_y = stream.uniform(-op.magnitude, op.magnitude);
        current = affine(current, draws, resample);
        break;
      }
      case AugmentKind::Rotate: {
        AffineDraws draws;
        draws.rotate_deg = stream.uniform(-op.magnitude, op.magnitude);
        current = affine(current, draws, resample);
        break;
      }
      case AugmentKind::Shear: {
        AffineDraws draws;
        draws.shear_x_deg = stream.uniform(-op.magnitude, op.magnitude);
        draws.shear_y_deg = stream.uniform(-op.magnitude, op.magnitude);
        current = affine(current, draws, resample);
        break;
      }
      case AugmentKind::HsvJitter: {
        HsvDraws draws{stream.uniform(-1.0, 1.0), stream.uniform(-1.0, 1.0),
                       stream.uniform(-1.0, 1.0)};
        current = hsv_jitter(current, op.hsv_gain_h, op.hsv_gain_s, op.hsv_gain_v, draws);
        break;
      }
      case AugmentKind::Mosaic: {
        if (partners.empty()) {
          fail(ErrorKind::EmptyDataset, "mosaic needs partner images but the pool is empty");
        }
        const LabeledImage& p1 = *partners[stream.index(partners.size())];
        const LabeledImage& p2 = *partners[stream.index(partners.size())];
        const LabeledImage& p3 = *partners[stream.index(partners.size())];
        const double cx =
            stream.uniform(0.5 * current.image.width, 1.5 * current.image.width);
        const double cy =
            stream.uniform(0.5 * current.image.height, 1.5 * current.image.height);
        current = mosaic(current, p1, p2, p3, cx, cy);
        break;
      }
    }
  }
  current.image_id = input.image_id;
  return current;
}

std::vector<LabeledImage> apply_pipeline(const std::vector<LabeledImage>& dataset,
                                         const AugmentPipeline& pipeline, Resample resample) {
  std::vector<LabeledImage> out(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t i) {
    out[i] = augment_image(dataset[i], pipeline, dataset, resample);
  });
  return out;
}

}  // namespace detkit
