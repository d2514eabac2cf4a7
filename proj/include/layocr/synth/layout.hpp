#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "layocr/core.hpp"
#include "layocr/synth/kde.hpp"

namespace layocr {

struct LayoutConfig {
  double margin_fraction = 0.03;
  double gutter_fraction = 0.015;   // of page width
  double gap_fraction = 0.006;      // vertical gap between stacked boxes, of page height
  double p_subheading = 0.3;
  double p_advertisement = 0.25;
  int min_columns = 2;
  int max_columns = 7;
  int max_retries = 8;
  double min_article_fraction = 0.03;  // of page height
};

struct SynthRegion {
  BBox bbox;
  RegionLabel label = RegionLabel::article;
  friend bool operator==(const SynthRegion&, const SynthRegion&) = default;
};

struct SyntheticPage {
  int width = 0;
  int height = 0;
  int columns = 0;
  std::uint64_t seed = 0;
  std::vector<SynthRegion> regions;
  friend bool operator==(const SyntheticPage&, const SyntheticPage&) = default;
};

// Independent per-page stream derived from the corpus seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline SyntheticPage generate_layout(const KdeModels& models, int page_w, int page_h,
                                     std::uint64_t seed, const LayoutConfig& cfg = {}) {
  for (auto label : all_labels)
    if (!models.count(label))
      throw ConfigError("no KDE model for label '" + std::string(to_string(label)) + "'");
  if (page_w <= 0 || page_h <= 0) throw ConfigError("page dimensions must be positive");

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double W = page_w, H = page_h;
  const double mx = cfg.margin_fraction * W, my = cfg.margin_fraction * H;
  const double gap = cfg.gap_fraction * H, gutter = cfg.gutter_fraction * W;

  SyntheticPage page{page_w, page_h, 0, seed, {}};

  const auto head = sample_kde(models.at(RegionLabel::headline), rng);
  const double head_w = std::clamp(head[0], 0.3, 1.0 - 2 * cfg.margin_fraction) * W;
  const double head_h = std::clamp(head[1], 0.03, 0.15) * H;
  const double head_x1 = (W - head_w) / 2;
  page.regions.push_back({{head_x1, my, head_x1 + head_w, my + head_h}, RegionLabel::headline});

  std::uniform_int_distribution<int> column_count(cfg.min_columns, cfg.max_columns);
  const int k = column_count(rng);
  page.columns = k;
  const double col_w = (W - 2 * mx - (k - 1) * gutter) / k;
  const double col_top = my + head_h + gap, col_bottom = H - my;
  const double min_article = cfg.min_article_fraction * H;

  for (int c = 0; c < k; ++c) {
    const double x1 = mx + c * (col_w + gutter), x2 = x1 + col_w;
    double y = col_top;
    std::size_t last_article = page.regions.size();  // sentinel: none yet
    while (col_bottom - y >= min_article) {
      if (unit(rng) < cfg.p_subheading) {
        const double sh = std::clamp(sample_kde(models.at(RegionLabel::subheading), rng)[1], 0.01, 0.05) * H;
        if (sh + gap + min_article <= col_bottom - y) {
          page.regions.push_back({{x1, y, x2, y + sh}, RegionLabel::subheading});
          y += sh + gap;
        }
      }
      const double remaining = col_bottom - y;
      double ah = 0;
      for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        ah = std::clamp(sample_kde(models.at(RegionLabel::article), rng)[1], 0.04, 0.6) * H;
        if (ah <= remaining) break;
      }
      ah = std::min(ah, remaining);  // shrink to fit
      last_article = page.regions.size();
      page.regions.push_back({{x1, y, x2, y + ah}, RegionLabel::article});
      y += ah + gap;
    }
    if (last_article < page.regions.size() && unit(rng) < cfg.p_advertisement)
      page.regions[last_article].label = RegionLabel::advertisement;
  }
  return page;
}

// Empty when every structural rule of a synthetic page holds.
inline std::vector<std::string> check_synthetic_page(const SyntheticPage& page,
                                                     const LayoutConfig& cfg = {}) {
  std::vector<std::string> bad;
  int headlines = 0;
  for (std::size_t i = 0; i < page.regions.size(); ++i) {
    const auto& r = page.regions[i];
    const auto& b = r.bbox;
    if (!b.is_valid() || b.x2 > page.width || b.y2 > page.height)
      bad.push_back("region " + std::to_string(i) + " outside page or degenerate");
    if (r.label == RegionLabel::headline) {
      ++headlines;
      const double cx = (b.x1 + b.x2) / 2;
      if (std::abs(cx - page.width / 2.0) > 0.02 * page.width)
        bad.push_back("headline not centered");
    }
  }
  if (headlines != 1) bad.push_back("expected exactly one headline, found " + std::to_string(headlines));
  if (page.columns < cfg.min_columns || page.columns > cfg.max_columns)
    bad.push_back("column count " + std::to_string(page.columns) + " out of range");
  for (std::size_t i = 0; i < page.regions.size(); ++i)
    for (std::size_t j = i + 1; j < page.regions.size(); ++j) {
      const auto& a = page.regions[i];
      const auto& c = page.regions[j];
      if (a.label != RegionLabel::article || c.label != RegionLabel::article) continue;
      const bool overlap = std::min(a.bbox.x2, c.bbox.x2) > std::max(a.bbox.x1, c.bbox.x1) &&
                           std::min(a.bbox.y2, c.bbox.y2) > std::max(a.bbox.y1, c.bbox.y1);
      if (overlap) bad.push_back("articles " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
    }
  return bad;
}

inline DetectionSet to_detection_set(const SyntheticPage& page, std::string page_id) {
  DetectionSet ds{std::move(page_id), page.width, page.height, {}};
  for (const auto& r : page.regions) ds.detections.push_back({r.bbox, r.label, 1.0, "synthetic"});
  return ds;
}

}  // namespace layocr
