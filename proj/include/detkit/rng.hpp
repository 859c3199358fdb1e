#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace detkit {

/// Deterministic random stream. Wraps mt19937_64 (whose output sequence the
/// standard fully specifies) and derives variates with fixed arithmetic, so
/// the same seed yields the same draws on every platform. std::*_distribution
/// is deliberately not used here: its mapping is implementation-defined.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Stream for one image: a pure function of (seed, image_id), so per-image
  /// augmentation is independent of dataset processing order.
  static RandomStream for_image(std::uint64_t seed, std::string_view image_id);

  /// Uniform draw in [0,1) with 53-bit resolution.
  double uniform();

  /// Uniform draw in [lo,hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0,n). n must be positive. Rejection sampled, no
  /// modulo bias.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 mix step; used for seed derivation.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace detkit
