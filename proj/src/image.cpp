#include "detkit/image.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>

#include "detkit/error.hpp"

namespace detkit {

ImageBuffer ImageBuffer::filled(int width, int height, std::uint8_t gray) {
  if (width < 1 || height < 1) fail(ErrorKind::InvalidParams, "image dimensions must be >= 1");
  ImageBuffer out;
  out.width = width;
  out.height = height;
  out.data.assign(static_cast<std::size_t>(width) * height * 3, gray);
  return out;
}

namespace {

struct FileHandle {
  std::FILE* fp = nullptr;
  ~FileHandle() {
    if (fp) std::fclose(fp);
  }
};

}  // namespace

ImageBuffer read_png(const std::filesystem::path& path) {
  FileHandle file;
  file.fp = std::fopen(path.string().c_str(), "rb");
  if (!file.fp) fail(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::IoError, "libpng initialization failed");
  }

  ImageBuffer out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::IoError, "failed to decode PNG '" + path.string() + "'");
  }

  png_init_io(png, file.fp);
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.data.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.pixel(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const ImageBuffer& image, const std::filesystem::path& path) {
  if (image.width < 1 || image.height < 1 ||
      image.data.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    fail(ErrorKind::InvalidParams, "image buffer shape is inconsistent");
  }
  FileHandle file;
  file.fp = std::fopen(path.string().c_str(), "wb");
  if (!file.fp) fail(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::IoError, "libpng initialization failed");
  }

  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) {
    rows[y] = const_cast<png_bytep>(image.pixel(0, y));
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::IoError, "failed to encode PNG '" + path.string() + "'");
  }

  png_init_io(png, file.fp);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detkit
