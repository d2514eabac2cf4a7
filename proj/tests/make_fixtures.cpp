// Regenerates the bundled mini corpus:
//   make_fixtures <tests/data>
// writes mini_corpus/{pages,gt,detections/<model>}/ and vocab.txt.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>

#include "layocr/harness.hpp"
#include "layocr/stripe_code.hpp"
#include "layocr/synth/kde.hpp"
#include "layocr/synth/layout.hpp"
#include "layocr/synth/raster.hpp"

using namespace layocr;
namespace fs = std::filesystem;

namespace {

constexpr int page_count = 5;
constexpr int page_w = 640, page_h = 900;
constexpr std::uint64_t master_seed = 20250601;

struct ModelProfile {
  std::string name;
  double jitter;   // fraction of box size
  double p_miss;
  int false_positives;
};

DetectionSet simulate(const DetectionSet& gt, const ModelProfile& m, Rng& rng) {
  std::normal_distribution<double> jit(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0), conf(0.5, 0.95);
  DetectionSet out{gt.page_id, gt.image_width, gt.image_height, {}};
  for (const auto& d : gt.detections) {
    if (unit(rng) < m.p_miss) continue;
    const double sx = m.jitter * d.bbox.width(), sy = m.jitter * d.bbox.height();
    BBox b{d.bbox.x1 + sx * jit(rng), d.bbox.y1 + sy * jit(rng), d.bbox.x2 + sx * jit(rng),
           d.bbox.y2 + sy * jit(rng)};
    out.detections.push_back({clamp_to_page(b, gt.image_width, gt.image_height), d.label, conf(rng), m.name});
  }
  std::uniform_real_distribution<double> px(0.0, gt.image_width - 80.0), py(0.0, gt.image_height - 60.0);
  for (int i = 0; i < m.false_positives; ++i) {
    const double x = px(rng), y = py(rng);
    out.detections.push_back({{x, y, x + 80, y + 60}, RegionLabel::article, 0.3 + 0.2 * unit(rng), m.name});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <data dir>\n";
    return 1;
  }
  const fs::path data = argv[1];
  const fs::path root = data / "mini_corpus";
  fs::remove_all(root);

  const auto models = fit_all(load_geometry(LAYOCR_GEOMETRY_DIR));
  const std::vector<ModelProfile> profiles{
      {"yolov10", 0.010, 0.05, 0}, {"yolov10p", 0.015, 0.10, 1}, {"yolov8", 0.020, 0.15, 1}};

  for (int i = 0; i < page_count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "page_%02d", i + 1);
    const auto seed = derive_seed(master_seed, static_cast<std::uint64_t>(i));
    const auto page = generate_layout(models, page_w, page_h, seed);
    const auto raster = rasterize(page, seed);
    fs::create_directories(root / "pages");
    write_png(raster.image, (root / "pages" / (std::string(id) + ".png")).string());
    write_file(root / "gt" / (std::string(id) + ".txt"), raster.labels);

    const auto gt = to_detection_set(page, id);
    Rng rng(seed ^ 0x5eedULL);
    for (const auto& m : profiles) {
      // the last page has no yolov8 output, exercising the missing-file path
      if (m.name == "yolov8" && i == page_count - 1) continue;
      write_file(root / "detections" / m.name / (std::string(id) + ".txt"), serialize_yolo(simulate(gt, m, rng)));
    }
  }

  std::string vocab;
  for (auto w : stripe_code::lexicon)
    if (w != "tbe" && w != "aud" && w != "wbich" && w != "tlie" && w != "ofthe" && w != "qzx")
      vocab += std::string(w) + "\n";
  write_file(data / "vocab.txt", vocab);
  std::cout << "wrote " << page_count << " pages under " << root << "\n";
}
