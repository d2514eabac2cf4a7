#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "layocr/core.hpp"

namespace layocr {

using Rng = std::mt19937_64;

// (width, height, x center, y center) as page fractions.
using GeometryFeatures = std::array<double, 4>;

struct GeometrySample {
  RegionLabel label = RegionLabel::article;
  GeometryFeatures features{};
};

inline constexpr double kde_bandwidth_floor = 1e-3;

// Product-Gaussian KDE over box geometry.
struct KdeModel {
  RegionLabel label = RegionLabel::article;
  std::vector<GeometryFeatures> samples;
  GeometryFeatures bandwidths{};

  double density(const GeometryFeatures& x) const {
    double norm = 1;
    for (double h : bandwidths) norm *= h * std::sqrt(2 * std::numbers::pi);
    double sum = 0;
    for (const auto& s : samples) {
      double e = 0;
      for (std::size_t d = 0; d < 4; ++d) {
        const double z = (x[d] - s[d]) / bandwidths[d];
        e += z * z;
      }
      sum += std::exp(-0.5 * e);
    }
    return sum / (norm * double(samples.size()));
  }
};

// Scott's rule per dimension: h = sigma * m^(-1/(d+4)), floored.
inline KdeModel fit_kde(std::span<const GeometrySample> samples, RegionLabel label) {
  KdeModel model{label, {}, {}};
  for (const auto& s : samples)
    if (s.label == label) model.samples.push_back(s.features);
  const auto m = model.samples.size();
  if (m < 2)
    throw InsufficientSamples("need at least 2 " + std::string(to_string(label)) +
                              " samples to fit a KDE, got " + std::to_string(m));
  const double factor = std::pow(double(m), -1.0 / (4 + 4));
  for (std::size_t d = 0; d < 4; ++d) {
    double mean = 0;
    for (const auto& s : model.samples) mean += s[d];
    mean /= double(m);
    double var = 0;
    for (const auto& s : model.samples) var += (s[d] - mean) * (s[d] - mean);
    const double sigma = std::sqrt(var / double(m - 1));
    model.bandwidths[d] = std::max(sigma * factor, kde_bandwidth_floor);
  }
  return model;
}

inline constexpr int kde_max_redraws = 64;

// Kernel noise is redrawn until it stays within the distance from the picked
// sample to the nearest end of [0,1]. The accepted noise is symmetric about
// zero, so draws stay in range without shifting the mean the way clamping
// would; after kde_max_redraws misses the sample itself is returned.
inline GeometryFeatures sample_kde(const KdeModel& model, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, model.samples.size() - 1);
  const auto& base = model.samples[pick(rng)];
  GeometryFeatures out;
  for (std::size_t d = 0; d < 4; ++d) {
    std::normal_distribution<double> noise(0.0, model.bandwidths[d]);
    const double room = std::min(base[d], 1.0 - base[d]);
    out[d] = base[d];
    for (int attempt = 0; attempt < kde_max_redraws; ++attempt) {
      const double e = noise(rng);
      if (std::abs(e) <= room) {
        out[d] = base[d] + e;
        break;
      }
    }
  }
  return out;
}

using KdeModels = std::map<RegionLabel, KdeModel>;

inline GeometrySample geometry_of(const Detection& d, int width, int height) {
  const auto& b = d.bbox;
  return {d.label,
          {b.width() / width, b.height() / height, (b.x1 + b.x2) / 2 / width,
           (b.y1 + b.y2) / 2 / height}};
}

// Every `*.txt` YOLO label file under `dir`, in path order.
inline std::vector<GeometrySample> load_geometry(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("geometry directory '" + dir.string() + "' not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  constexpr int virtual_size = 1'000'000;
  std::vector<GeometrySample> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (const auto& d : parse_yolo(content, f.stem().string(), virtual_size, virtual_size).detections)
      out.push_back(geometry_of(d, virtual_size, virtual_size));
  }
  return out;
}

inline KdeModels fit_all(std::span<const GeometrySample> samples) {
  KdeModels models;
  for (auto label : all_labels) models.emplace(label, fit_kde(samples, label));
  return models;
}

}  // namespace layocr
