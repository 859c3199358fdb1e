#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace detkit {

/// 8-bit RGB raster, row-major. Grayscale SEM inputs are carried as three
/// identical channels so color ops apply uniformly.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // width * height * 3

  static ImageBuffer filled(int width, int height, std::uint8_t gray);

  bool in_bounds(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  std::uint8_t* pixel(int x, int y) noexcept {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* pixel(int x, int y) const noexcept {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  bool operator==(const ImageBuffer&) const = default;
};

/// Reads a PNG of any bit depth / color type into 8-bit RGB.
ImageBuffer read_png(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG.
void write_png(const ImageBuffer& image, const std::filesystem::path& path);

}  // namespace detkit
