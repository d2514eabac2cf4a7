#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "layocr/core.hpp"
#include "layocr/csv.hpp"
#include "layocr/fusion.hpp"
#include "layocr/image.hpp"
#include "layocr/metrics.hpp"
#include "layocr/ocr.hpp"
#include "layocr/parallel.hpp"
#include "layocr/synth/augment.hpp"

namespace layocr {

namespace fs = std::filesystem;

inline constexpr std::string_view pipeline_fullpage = "fullpage";
inline constexpr std::string_view pipeline_fusion = "fusion";
inline constexpr std::string_view pipeline_concat = "concat";  // all models, unfused

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read '" + p.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// ---------------------------------------------------------------------------
// configuration

struct RunConfig {
  fs::path corpus_root;
  std::vector<std::string> models;     // empty: every directory under detections/
  std::vector<std::string> pipelines;  // empty: fullpage, fusion, then each model
  FusionConfig fusion;
  NgramConfig ngram;
  TrsOptions trs;
  WindowConfig window;
  PreprocessConfig preprocess;
  AugmentConfig augment;
  fs::path vocabulary;
  std::string engine = "stub";
  fs::path out_dir = "out";
  std::uint64_t seed = 0;
  int workers = 1;

  // Relative paths in the file resolve against the file's directory.
  static RunConfig from_json(const json& j, const fs::path& base_dir = {}) {
    RunConfig c;
    auto path = [&](const json& v) {
      fs::path p = v.get<std::string>();
      return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    try {
      for (const auto& [key, v] : j.items()) {
        if (key == "corpus") c.corpus_root = path(v);
        else if (key == "models") c.models = v.get<std::vector<std::string>>();
        else if (key == "pipelines") c.pipelines = v.get<std::vector<std::string>>();
        else if (key == "vocabulary") c.vocabulary = path(v);
        else if (key == "engine") c.engine = v.get<std::string>();
        else if (key == "out") c.out_dir = path(v);
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "workers") c.workers = v.get<int>();
        else if (key == "fusion") {
          c.fusion.iou_threshold = v.value("iou_threshold", c.fusion.iou_threshold);
          c.fusion.duplicate_iou_threshold = v.value("duplicate_iou_threshold", c.fusion.duplicate_iou_threshold);
        } else if (key == "ngram") {
          const auto unit = v.value("unit", std::string("word"));
          if (unit != "word" && unit != "character") throw ConfigError("ngram.unit must be word or character");
          c.ngram.unit = unit == "word" ? NgramUnit::word : NgramUnit::character;
          c.ngram.n = v.value("n", c.ngram.n);
        } else if (key == "trs_exact") c.trs.exact = v.get<bool>();
        else if (key == "window") {
          c.window.strip_height = v.value("strip_height", c.window.strip_height);
          c.window.overlap_fraction = v.value("overlap_fraction", c.window.overlap_fraction);
          c.window.tall_region_threshold = v.value("tall_region_threshold", c.window.tall_region_threshold);
        } else if (key == "preprocess") {
          auto& p = c.preprocess;
          p.median_denoise_radius = v.value("median_denoise_radius", p.median_denoise_radius);
          p.clahe_clip_limit = v.value("clahe_clip_limit", p.clahe_clip_limit);
          p.clahe_tiles_x = v.value("clahe_tiles_x", p.clahe_tiles_x);
          p.clahe_tiles_y = v.value("clahe_tiles_y", p.clahe_tiles_y);
          p.adaptive_window = v.value("adaptive_window", p.adaptive_window);
          p.adaptive_offset = v.value("adaptive_offset", p.adaptive_offset);
        } else if (key == "augment") {
          auto& a = c.augment;
          a.p_brightness_contrast = v.value("p_brightness_contrast", a.p_brightness_contrast);
          a.rotation_limit_degrees = v.value("rotation_limit_degrees", a.rotation_limit_degrees);
          a.p_elastic = v.value("p_elastic", a.p_elastic);
          a.p_blur = v.value("p_blur", a.p_blur);
          a.variants_per_element = v.value("variants_per_element", a.variants_per_element);
        } else {
          throw ConfigError("unknown config key '" + key + "'");
        }
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
  }

  static RunConfig load(const fs::path& file) {
    json j;
    try {
      j = json::parse(read_file(file));
    } catch (const json::exception& e) {
      throw ConfigError("config '" + file.string() + "': " + e.what());
    }
    return from_json(j, file.parent_path());
  }

  void validate() const {
    if (corpus_root.empty() || !fs::is_directory(corpus_root))
      throw ConfigError("corpus directory '" + corpus_root.string() + "' not found");
    if (vocabulary.empty() || !fs::is_regular_file(vocabulary))
      throw ConfigError("vocabulary file '" + vocabulary.string() + "' not found");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    std::set<std::string> seen;
    for (const auto& p : pipelines)
      if (!seen.insert(p).second) throw ConfigError("duplicate pipeline name '" + p + "'");
    fusion.validate();
    ngram.validate();
    window.validate();
    preprocess.validate();
    augment.validate();
  }
};

// ---------------------------------------------------------------------------
// corpus

struct CorpusPage {
  std::string id;
  fs::path image;
  std::map<std::string, fs::path> detections;  // model -> label file, present ones only
  std::optional<fs::path> ground_truth;
};

struct Corpus {
  std::vector<std::string> models;
  std::vector<CorpusPage> pages;
  std::vector<std::string> warnings;
};

// Layout: pages/<id>.png, detections/<model>/<id>.txt, optional gt/<id>.txt.
inline Corpus ingest_corpus(const fs::path& root, std::vector<std::string> models = {}) {
  Corpus c;
  const auto pages_dir = root / "pages";
  std::vector<fs::path> images;
  if (fs::is_directory(pages_dir))
    for (const auto& e : fs::directory_iterator(pages_dir))
      if (e.is_regular_file() && e.path().extension() == ".png") images.push_back(e.path());
  if (images.empty()) throw EmptyCorpus("no pages/*.png under '" + root.string() + "'");
  std::sort(images.begin(), images.end());

  if (models.empty() && fs::is_directory(root / "detections")) {
    for (const auto& e : fs::directory_iterator(root / "detections"))
      if (e.is_directory()) models.push_back(e.path().filename().string());
    std::sort(models.begin(), models.end());
  }
  c.models = models;

  for (const auto& img : images) {
    CorpusPage page{img.stem().string(), img, {}, std::nullopt};
    for (const auto& m : models) {
      const auto f = root / "detections" / m / (page.id + ".txt");
      if (fs::is_regular_file(f))
        page.detections.emplace(m, f);
      else
        c.warnings.push_back("page " + page.id + ": no detections from model '" + m +
                             "'; pipeline skipped for this page");
    }
    if (const auto gt = root / "gt" / (page.id + ".txt"); fs::is_regular_file(gt)) page.ground_truth = gt;
    c.pages.push_back(std::move(page));
  }
  return c;
}

// ---------------------------------------------------------------------------
// pipeline run

struct RunReport {
  std::vector<MetricsRecord> records;        // sorted by (pipeline, page)
  std::vector<PageTranscript> transcripts;   // parallel to records
  std::vector<std::string> warnings;
  std::vector<std::string> errors;
  int exit_code = 0;
};

inline std::vector<std::string> effective_pipelines(const RunConfig& cfg, const Corpus& corpus) {
  if (!cfg.pipelines.empty()) return cfg.pipelines;
  std::vector<std::string> out{std::string(pipeline_fullpage), std::string(pipeline_fusion)};
  out.insert(out.end(), corpus.models.begin(), corpus.models.end());
  return out;
}

namespace detail {

struct PageOutcome {
  std::vector<MetricsRecord> records;
  std::vector<PageTranscript> transcripts;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;
};

inline PageOutcome run_page(const CorpusPage& page, const std::vector<std::string>& pipelines,
                            const std::vector<std::string>& models, const RunConfig& cfg,
                            const Vocabulary& vocab, const OcrEngine& engine) {
  PageOutcome out;
  GrayImage image;
  try {
    image = read_png(page.image.string());
  } catch (const std::exception& e) {
    for (const auto& p : pipelines)
      out.errors.push_back("page " + page.id + " pipeline " + p + ": " + e.what());
    return out;
  }

  std::map<std::string, DetectionSet> sets;
  std::vector<std::string> load_errors;
  for (const auto& [model, file] : page.detections) {
    try {
      std::vector<std::string> warn;
      sets.emplace(model, parse_yolo(read_file(file), page.id, image.width(), image.height(), model, &warn));
      for (auto& w : warn) out.warnings.push_back("model " + model + ": " + w);
    } catch (const std::exception& e) {
      load_errors.push_back(model + ": " + e.what());
    }
  }

  for (const auto& name : pipelines) {
    const auto fail = [&](const std::string& msg) {
      out.errors.push_back("page " + page.id + " pipeline " + name + ": " + msg);
    };
    try {
      TranscribeOptions opt{OcrMode::layout, cfg.window, cfg.preprocess, 1, name};
      DetectionSet input{page.id, image.width(), image.height(), {}};
      if (name == pipeline_fullpage) {
        opt.mode = OcrMode::fullpage;
      } else if (name == pipeline_fusion || name == pipeline_concat) {
        std::vector<DetectionSet> available;
        for (const auto& m : models)
          if (auto it = sets.find(m); it != sets.end()) available.push_back(it->second);
        if (available.empty()) {
          out.warnings.push_back("page " + page.id + ": no detections available for " + name);
          continue;
        }
        if (name == pipeline_fusion) {
          input = fuse_detections(available, cfg.fusion);
        } else {
          for (auto& ds : available)
            input.detections.insert(input.detections.end(), ds.detections.begin(), ds.detections.end());
        }
      } else {
        auto it = sets.find(name);
        if (it == sets.end()) {
          const bool declared = std::find(models.begin(), models.end(), name) != models.end();
          if (!declared) {
            fail("unknown pipeline or model");
          } else if (page.detections.count(name)) {
            fail("detection file unreadable");  // parse error already captured
          }
          continue;
        }
        input = it->second;
      }
      auto ocr = transcribe_page(image, input, engine, opt);
      for (const auto& e : ocr.errors) fail(e.what());
      out.records.push_back(evaluate_page(ocr.page, vocab, cfg.ngram, cfg.trs));
      out.transcripts.push_back(std::move(ocr.page));
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  for (const auto& e : load_errors) out.errors.push_back("page " + page.id + " detections " + e);
  return out;
}

}  // namespace detail

// Fatal configuration problems throw; page-level problems are collected and
// reflected in exit_code (0 ok, 2 partial, 1 nothing produced).
inline RunReport run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  const auto vocab = Vocabulary::load(cfg.vocabulary.string());
  const auto engine = make_engine(cfg.engine);
  const auto corpus = ingest_corpus(cfg.corpus_root, cfg.models);
  const auto pipelines = effective_pipelines(cfg, corpus);

  std::vector<detail::PageOutcome> outcomes(corpus.pages.size());
  parallel_for(corpus.pages.size(), cfg.workers, [&](std::size_t i) {
    try {
      outcomes[i] = detail::run_page(corpus.pages[i], pipelines, corpus.models, cfg, vocab, *engine);
    } catch (const std::exception& e) {
      outcomes[i].errors.push_back("page " + corpus.pages[i].id + ": " + e.what());
    }
  });

  RunReport rep;
  rep.warnings = corpus.warnings;
  std::vector<std::size_t> idx;
  for (auto& o : outcomes) {
    for (std::size_t k = 0; k < o.records.size(); ++k) {
      rep.records.push_back(std::move(o.records[k]));
      rep.transcripts.push_back(std::move(o.transcripts[k]));
    }
    rep.warnings.insert(rep.warnings.end(), o.warnings.begin(), o.warnings.end());
    rep.errors.insert(rep.errors.end(), o.errors.begin(), o.errors.end());
  }
  idx.resize(rep.records.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(rep.records[a].pipeline_id, rep.records[a].page_id) <
           std::tie(rep.records[b].pipeline_id, rep.records[b].page_id);
  });
  RunReport sorted{{}, {}, std::move(rep.warnings), std::move(rep.errors), 0};
  for (auto i : idx) {
    sorted.records.push_back(std::move(rep.records[i]));
    sorted.transcripts.push_back(std::move(rep.transcripts[i]));
  }
  if (!sorted.errors.empty()) sorted.exit_code = sorted.records.empty() ? 1 : 2;
  return sorted;
}

// ---------------------------------------------------------------------------
// reports

inline std::string pages_csv(const std::vector<MetricsRecord>& records) {
  std::string out = "pipeline,page_id,region_count,scs,red,trs\n";
  for (const auto& r : records)
    out += csv::join({r.pipeline_id, r.page_id, std::to_string(r.region_count), csv::number(r.scs),
                      csv::number(r.red), csv::number(r.trs)}) + '\n';
  return out;
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out = "pipeline,pages,scs_mean,red_mean,trs_mean\n";
  for (const auto& r : rows)
    out += csv::join({r.pipeline_id, std::to_string(r.pages), csv::number(r.scs_mean),
                      csv::number(r.red_mean), csv::number(r.trs_mean)}) + '\n';
  return out;
}

inline std::string long_csv(const std::vector<MetricsRecord>& records) {
  std::string out = "pipeline,page_id,metric,value\n";
  for (const auto& r : records) {
    out += csv::join({r.pipeline_id, r.page_id, "scs", csv::number(r.scs)}) + '\n';
    out += csv::join({r.pipeline_id, r.page_id, "red", csv::number(r.red)}) + '\n';
    out += csv::join({r.pipeline_id, r.page_id, "trs", csv::number(r.trs)}) + '\n';
  }
  return out;
}

inline std::vector<MetricsRecord> sorted_records(std::vector<MetricsRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
    return std::tie(a.pipeline_id, a.page_id) < std::tie(b.pipeline_id, b.page_id);
  });
  return records;
}

// Writes pages.csv, aggregate.csv and long.csv into `dir`.
inline void emit_report(const std::vector<MetricsRecord>& records, const fs::path& dir) {
  if (records.empty()) throw Error("emit_report: no records");
  const auto rows = sorted_records(records);
  write_file(dir / "pages.csv", pages_csv(rows));
  write_file(dir / "aggregate.csv", aggregate_csv(aggregate(rows)));
  write_file(dir / "long.csv", long_csv(rows));
}

inline std::vector<MetricsRecord> parse_pages_csv(std::string_view content) {
  std::vector<MetricsRecord> out;
  const auto lines = text::split_lines(content);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != 6) throw ParseError("pages CSV line " + std::to_string(i + 1) + ": expected 6 fields");
    try {
      MetricsRecord r{f[1], f[0], std::nullopt, std::stod(f[4]), std::stod(f[5]), std::stoi(f[2])};
      if (!f[3].empty()) r.scs = std::stod(f[3]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError("pages CSV line " + std::to_string(i + 1) + ": bad number");
    }
  }
  return out;
}

// Full bundle: the three reports, one transcript JSON per (pipeline, page),
// and issues.txt when anything was skipped or failed.
inline void write_bundle(const RunReport& rep, const fs::path& dir) {
  fs::create_directories(dir);
  if (!rep.records.empty()) emit_report(rep.records, dir);
  for (const auto& t : rep.transcripts)
    write_file(dir / "transcripts" / t.pipeline_id / (t.page_id + ".json"), to_json(t).dump(2) + "\n");
  if (!rep.warnings.empty() || !rep.errors.empty()) {
    std::string issues;
    for (const auto& w : rep.warnings) issues += "warning: " + w + "\n";
    for (const auto& e : rep.errors) issues += "error: " + e + "\n";
    write_file(dir / "issues.txt", issues);
  }
}

}  // namespace layocr
