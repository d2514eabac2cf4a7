#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "layocr/harness.hpp"
#include "layocr/parallel.hpp"
#include "layocr/synth/augment.hpp"
#include "layocr/synth/kde.hpp"
#include "layocr/synth/layout.hpp"
#include "layocr/synth/raster.hpp"

namespace layocr {

struct SynthOptions {
  int pages = 1;
  int width = 1000;
  int height = 1400;
  std::uint64_t seed = 0;
  int workers = 1;
  LayoutConfig layout;
  RasterConfig raster;
  bool augment = false;
  AugmentConfig augment_cfg;
};

struct ManifestRow {
  int idx = 0;
  std::uint64_t seed = 0;
  int columns = 0;
  int regions = 0;
};

inline std::string page_name(int idx) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "page_%05d", idx);
  return buf;
}

// Writes images/, labels/ and manifest.csv (plus augmented/ when enabled).
// Every page draws from its own derived seed, so the corpus does not depend
// on the worker count.
inline std::vector<ManifestRow> synthesize_corpus(const KdeModels& models, const SynthOptions& opt,
                                                  const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  if (opt.pages < 0) throw ConfigError("page count must be >= 0");
  std::vector<SyntheticPage> layouts(static_cast<std::size_t>(opt.pages));
  std::vector<std::string> failures(layouts.size());
  parallel_for(layouts.size(), opt.workers, [&](std::size_t i) {
    const auto seed = derive_seed(opt.seed, i);
    layouts[i] = generate_layout(models, opt.width, opt.height, seed, opt.layout);
    if (auto bad = check_synthetic_page(layouts[i], opt.layout); !bad.empty())
      failures[i] = page_name(static_cast<int>(i)) + ": " + bad.front();
  });
  for (const auto& f : failures)
    if (!f.empty()) throw Error("synthetic page failed its invariants: " + f);

  // underrepresented classes: fewer elements than the most frequent class
  std::map<RegionLabel, std::size_t> label_counts;
  for (const auto& p : layouts)
    for (const auto& r : p.regions) ++label_counts[r.label];
  std::size_t most = 0;
  for (const auto& [l, n] : label_counts) most = std::max(most, n);

  fs::create_directories(out / "images");
  fs::create_directories(out / "labels");
  if (opt.augment) fs::create_directories(out / "augmented");
  parallel_for(layouts.size(), opt.workers, [&](std::size_t i) {
    const auto& page = layouts[i];
    const auto name = page_name(static_cast<int>(i));
    try {
      auto raster = rasterize(page, derive_seed(page.seed, 1), opt.raster);
      write_png(raster.image, (out / "images" / (name + ".png")).string());
      write_file(out / "labels" / (name + ".txt"), raster.labels);
      if (!opt.augment) return;
      Rng rng(derive_seed(opt.augment_cfg.seed ^ page.seed, 2));
      for (std::size_t r = 0; r < page.regions.size(); ++r) {
        const auto& reg = page.regions[r];
        if (label_counts.at(reg.label) >= most) continue;
        const auto& b = reg.bbox;
        auto crop = raster.image.crop(static_cast<int>(b.x1), static_cast<int>(b.y1),
                                      static_cast<int>(std::ceil(b.x2)), static_cast<int>(std::ceil(b.y2)));
        auto variants = augment_element(crop, opt.augment_cfg, rng);
        for (std::size_t v = 0; v < variants.size(); ++v) {
          char suffix[64];
          std::snprintf(suffix, sizeof suffix, "_r%03zu_%s_v%zu.png", r,
                        std::string(to_string(reg.label)).c_str(), v);
          write_png(variants[v], (out / "augmented" / (name + suffix)).string());
        }
      }
    } catch (const std::exception& e) {
      failures[i] = name + ": " + e.what();
    }
  });
  for (const auto& f : failures)
    if (!f.empty()) throw Error("synthesis failed: " + f);

  std::vector<ManifestRow> manifest;
  std::string csv_text = "idx,seed,columns,regions\n";
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    ManifestRow row{static_cast<int>(i), layouts[i].seed, layouts[i].columns,
                    static_cast<int>(layouts[i].regions.size())};
    csv_text += std::to_string(row.idx) + ',' + std::to_string(row.seed) + ',' +
                std::to_string(row.columns) + ',' + std::to_string(row.regions) + '\n';
    manifest.push_back(row);
  }
  write_file(out / "manifest.csv", csv_text);
  return manifest;
}

}  // namespace layocr
