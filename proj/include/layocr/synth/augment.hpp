#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "layocr/error.hpp"
#include "layocr/image.hpp"
#include "layocr/synth/kde.hpp"

namespace layocr {

struct AugmentConfig {
  double p_brightness_contrast = 0.5;
  double rotation_limit_degrees = 2.0;
  double p_elastic = 0.3;
  double p_blur = 0.2;
  int variants_per_element = 3;
  std::uint64_t seed = 0;

  double gain_min = 0.8, gain_max = 1.2;
  double bias_limit = 25.0;
  double elastic_sigma = 8.0;
  double elastic_max_displacement = 3.0;
  double blur_sigma_min = 0.5, blur_sigma_max = 1.5;

  void validate() const {
    for (double p : {p_brightness_contrast, p_elastic, p_blur})
      if (!(p >= 0 && p <= 1)) throw ConfigError("augmentation probabilities must lie in [0,1]");
    if (!(rotation_limit_degrees >= 0)) throw ConfigError("rotation limit must be >= 0");
    if (variants_per_element < 0) throw ConfigError("variants per element must be >= 0");
  }
};

namespace detail {

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Bilinear sample; outside the image reads as `fill`.
inline double sample_bilinear(const GrayImage& img, double x, double y, double fill) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double ax = x - x0, ay = y - y0;
  auto px = [&](int xx, int yy) -> double {
    if (xx < 0 || yy < 0 || xx >= img.width() || yy >= img.height()) return fill;
    return img.at(xx, yy);
  };
  const double top = px(x0, y0) * (1 - ax) + px(x0 + 1, y0) * ax;
  const double bot = px(x0, y0 + 1) * (1 - ax) + px(x0 + 1, y0 + 1) * ax;
  return top * (1 - ay) + bot * ay;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
  std::vector<double> k(2 * r + 1);
  double sum = 0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian smoothing of a float field with replicated borders.
inline std::vector<double> smooth(const std::vector<double>& f, int w, int h, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(f.size()), out(f.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * f[y * w + std::clamp(x + i, 0, w - 1)];
      tmp[y * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[std::clamp(y + i, 0, h - 1) * w + x];
      out[y * w + x] = acc;
    }
  return out;
}

}  // namespace detail

inline GrayImage adjust_brightness_contrast(const GrayImage& img, double gain, double bias) {
  GrayImage out = img;
  for (auto& p : out.pixels()) p = detail::to_byte(gain * p + bias);
  return out;
}

// Rotation about the image center; uncovered pixels are white.
inline GrayImage rotate(const GrayImage& img, double degrees) {
  if (degrees == 0) return img;
  const double a = degrees * std::numbers::pi / 180, c = std::cos(a), s = std::sin(a);
  const double cx = (img.width() - 1) / 2.0, cy = (img.height() - 1) / 2.0;
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double dx = x - cx, dy = y - cy;
      out.at(x, y) = detail::to_byte(detail::sample_bilinear(img, cx + c * dx + s * dy, cy - s * dx + c * dy, 255));
    }
  return out;
}

inline GrayImage elastic_deform(const GrayImage& img, Rng& rng, double sigma, double max_disp) {
  const int w = img.width(), h = img.height();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> fx(static_cast<std::size_t>(w) * h), fy(fx.size());
  for (auto& v : fx) v = u(rng);
  for (auto& v : fy) v = u(rng);
  fx = detail::smooth(fx, w, h, sigma);
  fy = detail::smooth(fy, w, h, sigma);
  double peak = 0;
  for (std::size_t i = 0; i < fx.size(); ++i) peak = std::max({peak, std::abs(fx[i]), std::abs(fy[i])});
  const double scale = peak > 0 ? max_disp / peak : 0;
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      out.at(x, y) = detail::to_byte(detail::sample_bilinear(img, x + scale * fx[i], y + scale * fy[i], 255));
    }
  return out;
}

inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  std::vector<double> f(img.pixels().begin(), img.pixels().end());
  f = detail::smooth(f, img.width(), img.height(), sigma);
  GrayImage out(img.width(), img.height());
  for (std::size_t i = 0; i < f.size(); ++i) out.pixels()[i] = detail::to_byte(f[i]);
  return out;
}

// Each variant independently: brightness/contrast, small rotation, elastic
// deformation, blur, in that order.
inline std::vector<GrayImage> augment_element(const GrayImage& img, const AugmentConfig& cfg,
                                              Rng& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GrayImage> out;
  for (int v = 0; v < cfg.variants_per_element; ++v) {
    GrayImage cur = img;
    if (unit(rng) < cfg.p_brightness_contrast) {
      const double gain = std::uniform_real_distribution<double>(cfg.gain_min, cfg.gain_max)(rng);
      const double bias = std::uniform_real_distribution<double>(-cfg.bias_limit, cfg.bias_limit)(rng);
      cur = adjust_brightness_contrast(cur, gain, bias);
    }
    if (cfg.rotation_limit_degrees > 0) {
      const double lim = cfg.rotation_limit_degrees;
      cur = rotate(cur, std::uniform_real_distribution<double>(-lim, lim)(rng));
    }
    if (unit(rng) < cfg.p_elastic)
      cur = elastic_deform(cur, rng, cfg.elastic_sigma, cfg.elastic_max_displacement);
    if (unit(rng) < cfg.p_blur)
      cur = gaussian_blur(cur, std::uniform_real_distribution<double>(cfg.blur_sigma_min, cfg.blur_sigma_max)(rng));
    out.push_back(std::move(cur));
  }
  return out;
}

}  // namespace layocr
