#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "layocr/image.hpp"
#include "layocr/stripe_code.hpp"
#include "layocr/synth/kde.hpp"
#include "layocr/synth/layout.hpp"

namespace layocr {

struct RasterConfig {
  int article_line_pitch = 10;   // headline lines are 3x
  int article_stroke = 5;
  int inset = 4;
  std::uint8_t ink = 30;
  double noise_sigma = 6.0;
};

struct RasterizedPage {
  GrayImage image;
  std::string labels;  // YOLO text, no confidence column
};

namespace detail {

inline int line_scale(RegionLabel label) {
  switch (label) {
    case RegionLabel::headline: return 3;
    case RegionLabel::subheading: return 2;
    default: return 1;
  }
}

inline void fill_rect(GrayImage& img, int x0, int y0, int x1, int y1, std::uint8_t v) {
  x0 = std::max(0, x0);
  y0 = std::max(0, y0);
  x1 = std::min(img.width(), x1);
  y1 = std::min(img.height(), y1);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) img.at(x, y) = v;
}

}  // namespace detail

// White page; each region drawn as rows of word blocks (stripe_code widths),
// advertisements framed; light Gaussian pixel noise on top.
inline RasterizedPage rasterize(const SyntheticPage& page, std::uint64_t seed,
                                const RasterConfig& cfg = {}) {
  Rng rng(seed);
  std::uniform_int_distribution<int> word(0, static_cast<int>(stripe_code::lexicon.size()) - 1);
  GrayImage img(page.width, page.height, 255);

  for (const auto& r : page.regions) {
    const int bx0 = static_cast<int>(std::ceil(r.bbox.x1)) + cfg.inset;
    const int by0 = static_cast<int>(std::ceil(r.bbox.y1)) + cfg.inset;
    const int bx1 = static_cast<int>(std::floor(r.bbox.x2)) - cfg.inset;
    const int by1 = static_cast<int>(std::floor(r.bbox.y2)) - cfg.inset;
    int tx0 = bx0, ty0 = by0, tx1 = bx1, ty1 = by1;
    if (r.label == RegionLabel::advertisement) {
      detail::fill_rect(img, bx0, by0, bx1, by0 + 2, cfg.ink);
      detail::fill_rect(img, bx0, by1 - 2, bx1, by1, cfg.ink);
      detail::fill_rect(img, bx0, by0, bx0 + 2, by1, cfg.ink);
      detail::fill_rect(img, bx1 - 2, by0, bx1, by1, cfg.ink);
      tx0 += 2 * cfg.inset;
      ty0 += 2 * cfg.inset;
      tx1 -= 2 * cfg.inset;
      ty1 -= 2 * cfg.inset;
    }
    const int scale = detail::line_scale(r.label);
    const int pitch = cfg.article_line_pitch * scale;
    // short boxes still get one thinner, vertically centred line
    const int stroke = std::min(cfg.article_stroke * scale, ty1 - ty0 - 2);
    if (stroke < 2) continue;
    const int lead = std::min(pitch - stroke, (ty1 - ty0 - stroke) / 2);
    for (int y = ty0 + lead; y + stroke <= ty1; y += pitch) {
      int x = tx0;
      while (true) {
        const int bw = stripe_code::block_width(word(rng));
        if (x + bw > tx1) break;
        detail::fill_rect(img, x, y, x + bw, y + stroke, cfg.ink);
        x += bw + stripe_code::word_gap;
      }
    }
  }

  if (cfg.noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (auto& p : img.pixels())
      p = static_cast<std::uint8_t>(std::clamp(std::lround(p + noise(rng)), 0L, 255L));
  }
  return {std::move(img), serialize_yolo(to_detection_set(page, "synthetic"), false)};
}

}  // namespace layocr
