// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "layocr/layocr.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace layocr;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path data_dir = LAYOCR_TEST_DATA;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = Clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.require(false, std::string("exception: ") + e.what());
  }
  char timing[32];
  std::snprintf(timing, sizeof timing, "%.2fs", seconds_since(t0));
  std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << " (" << v.detail.str() << timing
            << ")" << std::endl;
  failures += !v.pass;
}

PageTranscript page_of(const std::vector<std::string>& texts) {
  PageTranscript p{"page", "p", {}};
  double y = 0;
  for (const auto& t : texts) {
    p.regions.push_back({{0, y, 10, y + 10}, RegionLabel::article, t, 1.0});
    y += 10;
  }
  return p;
}

Detection box(double x1, double y1, double x2, double y2, RegionLabel l = RegionLabel::article, double c = 1.0,
              std::string src = "") {
  return {{x1, y1, x2, y2}, l, c, std::move(src)};
}

DetectionSet page_set(std::vector<Detection> d) { return {"p", 100, 100, std::move(d)}; }

const KdeModels& fitted_models() {
  static const KdeModels models = fit_all(load_geometry(LAYOCR_GEOMETRY_DIR));
  return models;
}

struct GoldenRuns {
  std::vector<RunReport> reports;
  std::vector<fs::path> bundles;
};

// The end-to-end runs are shared by the golden and fullpage criteria.
GoldenRuns& golden_runs() {
  static GoldenRuns runs = [] {
    GoldenRuns g;
    const auto base = fs::temp_directory_path() / "layocr_acceptance";
    fs::remove_all(base);
    int k = 0;
    for (int workers : {1, 1, 4, 4}) {
      auto cfg = RunConfig::load(data_dir / "mini_run.json");
      cfg.workers = workers;
      g.reports.push_back(run_pipeline(cfg));
      g.bundles.push_back(base / ("run" + std::to_string(k++) + "_w" + std::to_string(workers)));
      write_bundle(g.reports.back(), g.bundles.back());
    }
    return g;
  }();
  return runs;
}

}  // namespace

int main() {
  const auto suite_start = Clock::now();

  criterion(1, "metric oracle equivalence on random pages", [](Verdict& v) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1);
    std::string vocab_text;
    for (const auto& w : gen::vocabulary) vocab_text += w + "\n";
    const auto vocab = Vocabulary::from_text(vocab_text);
    const int pages = 1000;
    double worst_red = 0;
    for (int i = 0; i < pages; ++i) {
      const auto known = gen::random_known_page(rng, 10, 30);
      std::vector<std::string> texts;
      for (const auto& r : known.regions) texts.push_back(r.text);
      const auto page = page_of(texts);
      const auto want = oracle::scs(known.regions, gen::vocabulary);
      const auto got = scs(page, vocab);
      v.require(got.has_value() == want.has_value(), "SCS definedness, page " + std::to_string(i));
      if (got && want)
        v.require(std::abs(*got - boost::rational_cast<double>(*want)) < 1e-12, "SCS, page " + std::to_string(i));
      v.require(trs(page) == oracle::trs(known.canonical), "TRS, page " + std::to_string(i));
      worst_red = std::max(worst_red, std::abs(red(ngram_distribution(page)) - oracle::entropy_bits(known.words)));
    }
    v.require(worst_red < 1e-9, "RED tolerance");
    const double elapsed = seconds_since(t0);
    v.require(elapsed < 10.0, "runtime");
    v.detail << pages << " pages, max |dRED| " << worst_red << ", ";
  });

  criterion(2, "metric worked examples", [](Verdict& v) {
    const auto vocab = Vocabulary::from_text("the\ncat\nsat\n");
    v.require(scs(page_of({"the cat sat", "qzx the"}), vocab) == 0.75, "SCS 0.75");
    NgramDistribution d;
    d.counts = {{"a", 2}, {"b", 1}, {"c", 1}};
    d.total = 4;
    v.require(red(d) == 1.5, "RED 1.5");
    v.require(trs(page_of({"a", "a", "b"})) == 1.0 / 3.0, "TRS 1/3");
    v.detail << "SCS 0.75, RED 1.5 bits, TRS 1/3, ";
  });

  criterion(3, "fusion fixture, closure oracle, permutation invariance, idempotence", [](Verdict& v) {
    // four true regions seen by three models with small offsets
    const std::vector<BBox> truth{{10, 10, 90, 30}, {10, 40, 45, 95}, {55, 40, 90, 70}, {55, 75, 90, 95}};
    const std::vector<RegionLabel> labels{RegionLabel::headline, RegionLabel::article, RegionLabel::article,
                                          RegionLabel::advertisement};
    const std::vector<std::array<double, 4>> offsets{{0, 0, 0, 0}, {1, -1, 1, 0}, {-1, 1, 0, -1}};
    std::vector<DetectionSet> models;
    for (std::size_t m = 0; m < 3; ++m) {
      DetectionSet ds{"p", 100, 100, {}};
      for (std::size_t r = 0; r < truth.size(); ++r) {
        const auto& o = offsets[m];
        ds.detections.push_back(box(truth[r].x1 + o[0], truth[r].y1 + o[1], truth[r].x2 + o[2], truth[r].y2 + o[3],
                                    labels[r], 0.6 + 0.1 * double(m), "model" + std::to_string(m)));
      }
      models.push_back(ds);
    }
    for (std::size_t r = 0; r < truth.size(); ++r)
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b)
          v.require(iou(models[a].detections[r].bbox, models[b].detections[r].bbox) >= 0.7, "fixture IoU");
    std::vector<Detection> all;
    for (const auto& m : models) all.insert(all.end(), m.detections.begin(), m.detections.end());
    const auto fused = fuse_boxes(all);
    v.require(fused.size() == 4, "fixture fuses to 4 boxes");
    for (const auto& f : fused) v.require(f.member_count == 3, "member_count 3");
    v.require(fuse_detections(models).detections.size() == 4, "fuse_detections gives 4");

    std::mt19937_64 rng(3);
    const FusionConfig loose{0.7, 0.5};
    for (int i = 0; i < 1000; ++i) {
      auto dets = gen::random_boxes(rng, 12);
      v.require(group_boxes(dets) == oracle::closure_groups(dets, 0.7), "closure oracle, instance " + std::to_string(i));
      const auto ref = fuse_boxes(dets);
      auto shuffled = dets;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      v.require(fuse_boxes(shuffled) == ref, "permutation, instance " + std::to_string(i));
      v.require(suppress_near_duplicates(ref) == ref, "idempotence, instance " + std::to_string(i));
      const auto once = fuse_boxes(dets, loose);
      v.require(suppress_near_duplicates(once, loose) == once, "idempotence (loose), instance " + std::to_string(i));
    }
    v.detail << "fixture 4 boxes x 3 members, 1000 random instances, ";
  });

  criterion(4, "fullpage per-page TRS is 0", [](Verdict& v) {
    std::size_t n = 0;
    for (const auto& rep : golden_runs().reports)
      for (const auto& r : rep.records)
        if (r.pipeline_id == "fullpage") {
          v.require(r.trs == 0.0 && r.region_count == 1, "page " + r.page_id);
          ++n;
        }
    v.require(n == 4 * 5, "every page of every run scored");
    v.detail << n << " fullpage records over 4 runs, ";
  });

  criterion(5, "fused TRS <= concatenated TRS on doubled detections", [](Verdict& v) {
    StubEngine stub;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> jit(-1.0, 1.0);
    int pages = 0;
    double fused_sum = 0, concat_sum = 0;
    for (std::uint64_t i = 0; i < 6; ++i) {
      const auto seed = derive_seed(55, i);
      const auto layout = generate_layout(fitted_models(), 640, 900, seed);
      const auto raster = rasterize(layout, seed);
      const auto truth = to_detection_set(layout, "page" + std::to_string(i));
      DetectionSet a = truth, b = truth;
      for (auto& d : a.detections) d.source_model = "a";
      for (auto& d : b.detections) {
        d.source_model = "b";
        d.bbox = clamp_to_page({d.bbox.x1 + jit(rng), d.bbox.y1 + jit(rng), d.bbox.x2 + jit(rng), d.bbox.y2 + jit(rng)},
                               truth.image_width, truth.image_height);
      }
      DetectionSet concat = a;
      concat.detections.insert(concat.detections.end(), b.detections.begin(), b.detections.end());
      const auto fused = fuse_detections({a, b});
      const double t_fused = trs(transcribe_page(raster.image, fused, stub).page);
      const double t_concat = trs(transcribe_page(raster.image, concat, stub).page);
      v.require(t_fused <= t_concat, "page " + std::to_string(i));
      fused_sum += t_fused;
      concat_sum += t_concat;
      ++pages;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d pages, mean TRS fused %.4f vs concat %.4f, ", pages, fused_sum / pages,
                  concat_sum / pages);
    v.detail << buf;
  });

  criterion(6, "golden end-to-end bundle, repeat runs and workers {1,4}", [](Verdict& v) {
    const auto& runs = golden_runs();
    const auto golden = data_dir / "golden";
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(golden)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), golden);
      const auto want = read_file(e.path());
      for (const auto& b : runs.bundles) v.require(fs::exists(b / rel) && read_file(b / rel) == want, rel.string());
      ++files;
    }
    for (const auto& b : runs.bundles) {
      std::size_t produced = 0;
      for (const auto& e : fs::recursive_directory_iterator(b)) produced += e.is_regular_file();
      v.require(produced == files, "no extra files in " + b.filename().string());
    }
    for (const auto& r : runs.reports) v.require(r.exit_code == 0, "exit code");
    v.detail << files << " files x " << runs.bundles.size() << " runs byte-identical, ";
  });

  criterion(7, "detection AP oracle and confidence-rescaling invariance", [](Verdict& v) {
    using enum RegionLabel;
    v.require(average_precision(page_set({box(50, 50, 60, 60, article, 0.9), box(0, 0, 10, 10, article, 0.6)}),
                                page_set({box(0, 0, 10, 10)}), 0.5) == 0.5,
              "two-prediction AP 0.5");
    const auto gts = page_set({box(0, 0, 20, 20), box(30, 0, 50, 20), box(0, 60, 90, 70, headline),
                               box(0, 80, 40, 90, subheading), box(60, 30, 90, 60, advertisement),
                               box(60, 70, 90, 99, advertisement)});
    const auto preds = page_set({box(0, 0, 20, 20, article, 0.9), box(70, 70, 80, 80, article, 0.8),
                                 box(30, 0, 50, 21, article, 0.7), box(0, 60, 90, 70, headline, 0.95),
                                 box(50, 80, 90, 90, subheading, 0.6), box(0, 30, 30, 60, advertisement, 0.9),
                                 box(60, 30, 90, 60, advertisement, 0.5), box(0, 60, 90, 70, subheading, 0.3)});
    // per class by hand: 5/6, 1, 0, 1/4
    const std::vector<double> want{5.0 / 6.0, 1.0, 0.0, 0.25};
    const auto m = map_score(preds, gts);
    v.require(m.per_class.size() == 4, "4 classes");
    for (std::size_t i = 0; i < 4 && i < m.per_class.size(); ++i)
      v.require(std::abs(m.per_class[i].ap - want[i]) < 1e-15, "class " + std::to_string(i));
    v.require(m.map && std::abs(*m.map - (5.0 / 6.0 + 1.0 + 0.0 + 0.25) / 4) < 1e-15, "mAP");

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(0, 60), size(10, 40), conf(0.05, 1.0), scale(0.01, 0.99);
    for (int i = 0; i < 200; ++i) {
      DetectionSet p = page_set({}), g = page_set({});
      for (int k = 0; k < 4; ++k) {
        const double x = pos(rng), y = pos(rng);
        g.detections.push_back(box(x, y, x + size(rng), y + size(rng)));
      }
      for (int k = 0; k < 6; ++k) {
        const double x = pos(rng), y = pos(rng);
        p.detections.push_back(box(x, y, x + size(rng), y + size(rng), article, conf(rng)));
      }
      auto q = p;
      const double s = scale(rng);
      for (auto& d : q.detections) d.confidence *= s;
      for (double thr : {0.3, 0.5, 0.75})
        v.require(average_precision(p, g, thr) == average_precision(q, g, thr), "rescaling, instance " + std::to_string(i));
    }
    v.detail << "AP 0.5, 4-class mAP " << *m.map << ", 200 rescaled instances, ";
  });

  criterion(8, "synthetic generator invariants and label round-trip", [](Verdict& v) {
    const auto t0 = Clock::now();
    std::set<int> columns;
    double worst = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
      const auto seed = derive_seed(8, i);
      const auto page = generate_layout(fitted_models(), 1000, 1400, seed);
      const auto bad = check_synthetic_page(page);
      v.require(bad.empty(), "page " + std::to_string(i) + (bad.empty() ? "" : ": " + bad.front()));
      columns.insert(page.columns);
      const auto raster = rasterize(page, seed);
      const auto parsed = parse_yolo(raster.labels, "p", page.width, page.height);
      v.require(parsed.detections.size() == page.regions.size(), "label count, page " + std::to_string(i));
      for (std::size_t k = 0; k < page.regions.size() && k < parsed.detections.size(); ++k) {
        const auto& a = parsed.detections[k].bbox;
        const auto& b = page.regions[k].bbox;
        v.require(parsed.detections[k].label == page.regions[k].label, "label, page " + std::to_string(i));
        worst = std::max({worst, std::abs(a.x1 - b.x1), std::abs(a.y1 - b.y1), std::abs(a.x2 - b.x2),
                          std::abs(a.y2 - b.y2)});
      }
    }
    v.require(columns == std::set<int>{2, 3, 4, 5, 6, 7}, "all six column counts");
    v.require(worst <= 0.5, "round-trip within 0.5px");
    v.require(seconds_since(t0) < 60.0, "runtime");
    v.detail << "200 pages, columns 2-7 all seen, max round-trip error " << worst << "px, ";
  });

  criterion(9, "KDE sample mean within 3 standard errors", [](Verdict& v) {
    constexpr int n = 100000;
    double worst_z = 0;
    for (const auto& [label, model] : fitted_models()) {
      Rng rng(derive_seed(9, label_index(label)));
      std::array<double, 4> sum{}, sq{};
      for (int i = 0; i < n; ++i) {
        const auto x = sample_kde(model, rng);
        for (std::size_t d = 0; d < 4; ++d) {
          sum[d] += x[d];
          sq[d] += x[d] * x[d];
        }
      }
      for (std::size_t d = 0; d < 4; ++d) {
        double target = 0;
        for (const auto& s : model.samples) target += s[d];
        target /= double(model.samples.size());
        const double mean = sum[d] / n;
        const double se = std::sqrt((sq[d] / n - mean * mean) / n);
        const double z = std::abs(mean - target) / se;
        worst_z = std::max(worst_z, z);
        v.require(z <= 3.0, std::string(to_string(label)) + " dimension " + std::to_string(d));
      }
    }
    v.detail << "4 labels x 4 dimensions, 1e5 draws each, max |z| " << worst_z << ", ";
  });

  criterion(10, "preprocessing binary output and brute-force threshold equivalence", [](Verdict& v) {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> dim(31, 64), px(0, 255);
    const PreprocessConfig cfg;
    for (int i = 0; i < 20; ++i) {
      GrayImage img(dim(rng), dim(rng));
      for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(px(rng));
      const auto out = preprocess(img, cfg);
      v.require(out.width() == img.width() && out.height() == img.height(), "dimensions");
      v.require(std::all_of(out.pixels().begin(), out.pixels().end(), [](auto p) { return p == 0 || p == 255; }),
                "binary, image " + std::to_string(i));
      const auto enhanced = clahe(median_filter(img, cfg.median_denoise_radius), cfg.clahe_clip_limit,
                                  cfg.clahe_tiles_x, cfg.clahe_tiles_y);
      v.require(out == oracle::mean_threshold(enhanced, cfg.adaptive_window, cfg.adaptive_offset),
                "pipeline vs oracle, image " + std::to_string(i));
      v.require(adaptive_threshold(img, cfg.adaptive_window, cfg.adaptive_offset) ==
                    oracle::mean_threshold(img, cfg.adaptive_window, cfg.adaptive_offset),
                "threshold vs oracle, image " + std::to_string(i));
    }
    v.detail << "20 images 31-64px, ";
  });

  criterion(11, "whole suite under 2 minutes, offline, stub engine only", [&](Verdict& v) {
    const auto t0 = Clock::now();
    const int status = std::system((std::string(LAYOCR_UNIT_TESTS) + " >/dev/null 2>&1").c_str());
    const double unit = seconds_since(t0);
    v.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "unit tests pass");
    const double total = seconds_since(suite_start);
    v.require(total < 120.0, "total runtime");
    char buf[96];
    std::snprintf(buf, sizeof buf, "unit tests %.1fs + acceptance checks %.1fs = %.1fs, ", unit, total - unit, total);
    v.detail << buf;
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
