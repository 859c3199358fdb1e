#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "detkit/geometry.hpp"
#include "detkit/image.hpp"

namespace detkit {

struct BoxLabel {
  int class_id = 0;
  NormBox box;

  bool operator==(const BoxLabel&) const = default;
};

/// Raster plus its labels; the unit offline augmentation transforms.
struct LabeledImage {
  ImageBuffer image;
  std::vector<BoxLabel> labels;
  std::string image_id;

  bool operator==(const LabeledImage&) const = default;
};

enum class AugmentKind { VFlip, HFlip, Scale, Translate, Rotate, Shear, HsvJitter, Mosaic };

const char* to_string(AugmentKind kind) noexcept;
AugmentKind augment_kind_from_string(const std::string& name);

/// One probability-weighted augmentation operator. magnitude is the +/-
/// sampling bound (Scale: gain fraction, Translate: fraction of the frame,
/// Rotate/Shear: degrees); HsvJitter uses the three channel gains instead.
struct AugmentOp {
  AugmentKind kind = AugmentKind::VFlip;
  double probability = 1.0;
  double magnitude = 0.0;
  double hsv_gain_h = 0.0;
  double hsv_gain_s = 0.0;
  double hsv_gain_v = 0.0;
};

void validate_op(const AugmentOp& op);

/// Ordered, seeded operator list. Output is a pure function of
/// (inputs, ops, seed).
struct AugmentPipeline {
  std::vector<AugmentOp> ops;
  std::uint64_t seed = 0;
};

enum class FlipAxis { Vertical, Horizontal };

/// Mirrors the raster about the axis; vertical maps cy -> 1-cy, horizontal
/// maps cx -> 1-cx. Box sizes are unchanged.
LabeledImage flip(const LabeledImage& input, FlipAxis axis);

/// Concrete draws for one affine application (the sampling happens in the
/// pipeline, so this op is deterministic).
struct AffineDraws {
  double scale = 1.0;          // multiplicative factor
  double rotate_deg = 0.0;
  double shear_x_deg = 0.0;
  double shear_y_deg = 0.0;
  double translate_x = 0.0;    // fraction of width
  double translate_y = 0.0;    // fraction of height
};

enum class Resample { Nearest, Bilinear };

/// Single combined affine map applied as: recenter to the image center,
/// rotate+scale, shear, translate, recenter back. Empty regions fill with
/// gray 114. Boxes are mapped corner-wise to their axis-aligned hull,
/// clipped to the frame, and dropped unless width > 2px, height > 2px,
/// clipped/original area ratio > 0.1, and aspect ratio < 20.
/// Identity draws return the input unchanged bit-exactly.
LabeledImage affine(const LabeledImage& input, const AffineDraws& draws,
                    Resample resample = Resample::Nearest);

/// Signed unit draws in [-1,1] for the three HSV channels.
struct HsvDraws {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

/// Multiplies each HSV channel by (1 + draw * gain); hue wraps, saturation
/// and value clamp. Labels are untouched.
LabeledImage hsv_jitter(const LabeledImage& input, double gain_h, double gain_s,
                        double gain_v, const HsvDraws& draws);

/// Composes four equally sized images on a double-size gray canvas around
/// the given center point, translating and clipping labels; boxes cropped
/// away entirely are dropped. Center must lie in [w/2,3w/2] x [h/2,3h/2].
LabeledImage mosaic(const LabeledImage& top_left, const LabeledImage& top_right,
                    const LabeledImage& bottom_left, const LabeledImage& bottom_right,
                    double center_x, double center_y);

/// Runs the pipeline on one image with its random stream derived from
/// (pipeline.seed, image_id). partner_pool supplies mosaic partners.
LabeledImage augment_image(const LabeledImage& input, const AugmentPipeline& pipeline,
                           std::span<const LabeledImage> partner_pool,
                           Resample resample = Resample::Nearest);

/// Applies the pipeline to every image; mosaic partners are drawn from the
/// original dataset, so results do not depend on processing order.
std::vector<LabeledImage> apply_pipeline(const std::vector<LabeledImage>& dataset,
                                         const AugmentPipeline& pipeline,
                                         Resample resample = Resample::Nearest);

}  // namespace detkit
