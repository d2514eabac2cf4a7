#pragma once

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "layocr/error.hpp"

namespace layocr {

// 8-bit grayscale raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 255) : w_(width), h_(height) {
    if (width <= 0 || height <= 0) throw Error("image dimensions must be positive");
    px_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
      : w_(width), h_(height), px_(std::move(pixels)) {
    if (width <= 0 || height <= 0) throw Error("image dimensions must be positive");
    if (px_.size() != static_cast<std::size_t>(width) * height)
      throw Error("pixel count does not match dimensions");
  }

  int width() const { return w_; }
  int height() const { return h_; }
  bool empty() const { return px_.empty(); }

  std::uint8_t& at(int x, int y) { return px_[static_cast<std::size_t>(y) * w_ + x]; }
  std::uint8_t at(int x, int y) const { return px_[static_cast<std::size_t>(y) * w_ + x]; }

  // Border-replicating read.
  std::uint8_t clamped(int x, int y) const {
    x = x < 0 ? 0 : x >= w_ ? w_ - 1 : x;
    y = y < 0 ? 0 : y >= h_ ? h_ - 1 : y;
    return at(x, y);
  }

  const std::vector<std::uint8_t>& pixels() const { return px_; }
  std::vector<std::uint8_t>& pixels() { return px_; }

  GrayImage crop(int x0, int y0, int x1, int y1) const {
    x0 = std::max(0, x0);
    y0 = std::max(0, y0);
    x1 = std::min(w_, x1);
    y1 = std::min(h_, y1);
    if (x1 <= x0 || y1 <= y0) throw Error("crop rectangle is empty");
    GrayImage out(x1 - x0, y1 - y0);
    for (int y = y0; y < y1; ++y)
      std::copy_n(&px_[static_cast<std::size_t>(y) * w_ + x0], x1 - x0, &out.at(0, y - y0));
    return out;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int w_ = 0, h_ = 0;
  std::vector<std::uint8_t> px_;
};

namespace detail {
struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports through stderr by default; failures surface as exceptions here.
[[noreturn]] inline void png_quiet_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }
inline void png_quiet_warning(png_structp, png_const_charp) {}
}  // namespace detail

inline void write_png(const GrayImage& img, const std::string& path) {
  detail::FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw ImageIoError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_quiet_error,
                                                detail::png_quiet_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError("failed writing PNG '" + path + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(&img.pixels()[static_cast<std::size_t>(y) * img.width()]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Any PNG colour type is converted to 8-bit luminance.
inline GrayImage read_png(const std::string& path) {
  detail::FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ImageIoError("cannot open '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_quiet_error,
                                               detail::png_quiet_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("libpng initialisation failed");
  }
  std::vector<std::uint8_t> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("'" + path + "' is not a readable PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("unsupported PNG layout in '" + path + "'");
  }
  pixels.resize(static_cast<std::size_t>(w) * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = &pixels[static_cast<std::size_t>(y) * w];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return GrayImage(w, h, std::move(pixels));
}

}  // namespace layocr
