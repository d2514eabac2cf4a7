#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "layocr/error.hpp"
#include "layocr/image.hpp"

namespace layocr {

struct PreprocessConfig {
  int median_denoise_radius = 1;
  double clahe_clip_limit = 2.0;
  int clahe_tiles_x = 8;
  int clahe_tiles_y = 8;
  int adaptive_window = 31;  // odd
  int adaptive_offset = 10;

  void validate() const {
    if (median_denoise_radius < 0) throw ConfigError("median radius must be >= 0");
    if (clahe_clip_limit < 1) throw ConfigError("CLAHE clip limit must be >= 1");
    if (clahe_tiles_x < 1 || clahe_tiles_y < 1) throw ConfigError("CLAHE tile grid must be >= 1");
    if (adaptive_window < 3 || adaptive_window % 2 == 0)
      throw ConfigError("adaptive window must be odd and >= 3");
  }
};

inline GrayImage median_filter(const GrayImage& img, int radius) {
  if (radius <= 0) return img;
  GrayImage out(img.width(), img.height());
  std::vector<std::uint8_t> win;
  win.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      win.clear();
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) win.push_back(img.clamped(x + dx, y + dy));
      auto mid = win.begin() + win.size() / 2;
      std::nth_element(win.begin(), mid, win.end());
      out.at(x, y) = *mid;
    }
  return out;
}

// Contrast-limited adaptive histogram equalization: clipped per-tile
// histograms, excess redistributed uniformly, bilinear blend of the four
// nearest tile mappings.
inline GrayImage clahe(const GrayImage& img, double clip_limit, int tiles_x, int tiles_y) {
  const int w = img.width(), h = img.height();
  tiles_x = std::clamp(tiles_x, 1, w);
  tiles_y = std::clamp(tiles_y, 1, h);
  auto x_edge = [&](int i) { return static_cast<int>(static_cast<long long>(i) * w / tiles_x); };
  auto y_edge = [&](int j) { return static_cast<int>(static_cast<long long>(j) * h / tiles_y); };

  std::vector<std::array<std::uint8_t, 256>> lut(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (int ty = 0; ty < tiles_y; ++ty)
    for (int tx = 0; tx < tiles_x; ++tx) {
      std::array<double, 256> hist{};
      const int x0 = x_edge(tx), x1 = x_edge(tx + 1), y0 = y_edge(ty), y1 = y_edge(ty + 1);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) hist[img.at(x, y)] += 1;
      const double area = double(x1 - x0) * (y1 - y0);
      // the clip level scales with tile area so equal content maps equally
      // in tiles of different size
      const double limit = clip_limit * area / 256.0;
      double excess = 0;
      for (auto& c : hist)
        if (c > limit) {
          excess += c - limit;
          c = limit;
        }
      auto& table = lut[static_cast<std::size_t>(ty) * tiles_x + tx];
      double cdf = 0;
      for (int v = 0; v < 256; ++v) {
        cdf += hist[v] + excess / 256.0;
        table[v] = static_cast<std::uint8_t>(std::clamp(std::lround(cdf * 255.0 / area), 0L, 255L));
      }
    }

  const double tile_w = double(w) / tiles_x, tile_h = double(h) / tiles_y;
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const double fy = (y + 0.5) / tile_h - 0.5;
    int ty0 = static_cast<int>(std::floor(fy));
    double ay = fy - ty0;
    int ty1 = ty0 + 1;
    if (ty0 < 0) { ty0 = 0; ay = 0; }
    if (ty1 > tiles_y - 1) { ty1 = tiles_y - 1; }
    if (ty0 > tiles_y - 1) { ty0 = tiles_y - 1; }
    for (int x = 0; x < w; ++x) {
      const double fx = (x + 0.5) / tile_w - 0.5;
      int tx0 = static_cast<int>(std::floor(fx));
      double ax = fx - tx0;
      int tx1 = tx0 + 1;
      if (tx0 < 0) { tx0 = 0; ax = 0; }
      if (tx1 > tiles_x - 1) { tx1 = tiles_x - 1; }
      if (tx0 > tiles_x - 1) { tx0 = tiles_x - 1; }
      const auto v = img.at(x, y);
      auto m = [&](int tx, int ty) { return double(lut[static_cast<std::size_t>(ty) * tiles_x + tx][v]); };
      const double top = m(tx0, ty0) * (1 - ax) + m(tx1, ty0) * ax;
      const double bot = m(tx0, ty1) * (1 - ax) + m(tx1, ty1) * ax;
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(top * (1 - ay) + bot * ay), 0L, 255L));
    }
  }
  return out;
}

// A pixel becomes 0 when it is darker than (local mean - offset), else 255.
// The local mean runs over the window clipped to the image; the comparison is
// done in integers so it is exact.
inline GrayImage adaptive_threshold(const GrayImage& img, int window, int offset) {
  const int w = img.width(), h = img.height(), r = window / 2;
  std::vector<long long> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto I = [&](int x, int y) -> long long& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) I(x + 1, y + 1) = img.at(x, y) + I(x, y + 1) + I(x + 1, y) - I(x, y);
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
      const long long count = static_cast<long long>(x1 - x0) * (y1 - y0);
      const long long sum = I(x1, y1) - I(x0, y1) - I(x1, y0) + I(x0, y0);
      out.at(x, y) = img.at(x, y) * count < sum - static_cast<long long>(offset) * count ? 0 : 255;
    }
  }
  return out;
}

inline GrayImage preprocess(const GrayImage& img, const PreprocessConfig& cfg = {}) {
  cfg.validate();
  if (img.width() < cfg.adaptive_window || img.height() < cfg.adaptive_window)
    throw ImageTooSmall("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        " is smaller than the adaptive window " + std::to_string(cfg.adaptive_window));
  auto denoised = median_filter(img, cfg.median_denoise_radius);
  auto enhanced = clahe(denoised, cfg.clahe_clip_limit, cfg.clahe_tiles_x, cfg.clahe_tiles_y);
  return adaptive_threshold(enhanced, cfg.adaptive_window, cfg.adaptive_offset);
}

}  // namespace layocr
