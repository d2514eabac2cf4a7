#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layocr/layocr.hpp"

namespace fs = std::filesystem;
using namespace layocr;

namespace {

void emit(const std::string& content, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << content;
  else
    write_file(out, content);
}

int cmd_fuse(const std::vector<std::string>& files, std::string page_id, int width, int height,
             const std::string& image, const FusionConfig& cfg, const std::string& out) {
  if (!image.empty()) {
    const auto img = read_png(image);
    width = img.width();
    height = img.height();
    if (page_id.empty()) page_id = fs::path(image).stem().string();
  }
  if (width <= 0 || height <= 0) throw ConfigError("give --image or both --width and --height");
  std::vector<DetectionSet> sets;
  for (const auto& f : files) {
    const fs::path p(f);
    const auto model = p.has_parent_path() ? p.parent_path().filename().string() : p.stem().string();
    std::vector<std::string> warnings;
    sets.push_back(parse_yolo(read_file(p), page_id.empty() ? p.stem().string() : page_id, width,
                              height, model, &warnings));
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    sets.back().page_id = sets.front().page_id;
  }
  emit(serialize_yolo(fuse_detections(sets, cfg)), out);
  return 0;
}

int cmd_ocr(const std::string& engine_spec, const std::string& mode, const std::string& dets,
            const std::string& image_path, const std::string& out, int workers,
            std::string pipeline, std::string page_id) {
  const auto image = read_png(image_path);
  if (page_id.empty()) page_id = fs::path(image_path).stem().string();
  TranscribeOptions opt;
  opt.mode = mode == "fullpage" ? OcrMode::fullpage : OcrMode::layout;
  opt.workers = workers;
  opt.pipeline_id = pipeline.empty() ? mode : pipeline;
  DetectionSet ds{page_id, image.width(), image.height(), {}};
  if (opt.mode == OcrMode::layout) {
    if (dets.empty()) throw ConfigError("--detections is required in layout mode");
    std::vector<std::string> warnings;
    ds = parse_yolo(read_file(dets), page_id, image.width(), image.height(),
                    fs::path(dets).parent_path().filename().string(), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  }
  const auto engine = make_engine(engine_spec);
  const auto res = transcribe_page(image, ds, *engine, opt);
  emit(to_json(res.page).dump(2) + "\n", out);
  if (!out.empty() && out != "-") {
    json prov = json::array();
    for (std::size_t i = 0; i < res.page.regions.size(); ++i)
      prov.push_back({{"region", i}, {"engine_confidences", res.engine_confidences[i]}});
    write_file(out + ".provenance.json", json{{"engine", engine_spec}, {"regions", prov}}.dump(2) + "\n");
  }
  for (const auto& e : res.errors) std::cerr << "error: " << e.what() << '\n';
  return res.errors.empty() ? 0 : 2;
}

int cmd_eval(const std::vector<std::string>& files, const std::string& vocab_path,
             const NgramConfig& ngram, TrsOptions trs, const std::string& out) {
  const auto vocab = Vocabulary::load(vocab_path);
  std::vector<MetricsRecord> records;
  for (const auto& f : files) {
    try {
      records.push_back(evaluate_page(page_from_json(json::parse(read_file(f))), vocab, ngram, trs));
    } catch (const json::exception& e) {
      throw ParseError(f + ": " + e.what());
    }
  }
  emit(pages_csv(sorted_records(std::move(records))), out);
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out) {
  std::vector<MetricsRecord> records;
  for (const auto& f : files) {
    auto part = parse_pages_csv(read_file(f));
    records.insert(records.end(), part.begin(), part.end());
  }
  emit_report(records, out.empty() ? "." : out);
  return 0;
}

int cmd_synth(SynthOptions opt, const std::string& geometry, const std::string& out) {
  const auto samples = load_geometry(geometry);
  const auto models = fit_all(samples);
  const auto manifest = synthesize_corpus(models, opt, out);
  std::cerr << "wrote " << manifest.size() << " pages to " << out << '\n';
  return 0;
}

int cmd_det_eval(const std::string& pred_dir, const std::string& gt_dir, int width, int height,
                 const std::string& out) {
  std::vector<fs::path> gt_files;
  for (const auto& e : fs::directory_iterator(gt_dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") gt_files.push_back(e.path());
  std::sort(gt_files.begin(), gt_files.end());
  if (gt_files.empty()) throw EmptyCorpus("no ground-truth files in '" + gt_dir + "'");
  std::vector<DetectionSet> preds, gts;
  for (const auto& g : gt_files) {
    const auto id = g.stem().string();
    gts.push_back(parse_yolo(read_file(g), id, width, height, "gt"));
    const auto p = fs::path(pred_dir) / g.filename();
    if (fs::is_regular_file(p)) {
      preds.push_back(parse_yolo(read_file(p), id, width, height, "pred"));
    } else {
      std::cerr << "warning: no predictions for " << id << '\n';
      preds.push_back({id, width, height, {}});
    }
  }
  const auto coco = map_score(preds, gts, DetEvalConfig::at50_95());
  std::string csv_text = "class,iou_threshold,ap\n";
  char thr[16];
  for (const auto& c : coco.per_class) {
    std::snprintf(thr, sizeof thr, "%.2f", c.iou_threshold);
    csv_text += std::string(to_string(c.label)) + ',' + thr + ',' + csv::number(c.ap) + '\n';
  }
  const auto at50 = coco.map_per_threshold.empty() ? std::optional<double>()
                                                   : std::optional<double>(coco.map_per_threshold.front().second);
  csv_text += "mAP@0.5,0.50," + csv::number(at50) + '\n';
  csv_text += "mAP@0.5:0.95,0.50:0.95," + csv::number(coco.map) + '\n';
  emit(csv_text, out);
  return 0;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> workers, const std::string& out, const std::string& corpus,
            const std::string& vocab, const std::string& engine) {
  auto cfg = RunConfig::load(config_path);
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  if (!out.empty()) cfg.out_dir = out;
  if (!corpus.empty()) cfg.corpus_root = corpus;
  if (!vocab.empty()) cfg.vocabulary = vocab;
  if (!engine.empty()) cfg.engine = engine;
  const auto report = run_pipeline(cfg);
  write_bundle(report, cfg.out_dir);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& e : report.errors) std::cerr << "error: " << e << '\n';
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layout-aware OCR toolkit: detection fusion, region OCR, unsupervised metrics, synthetic pages"};
  app.require_subcommand(1);

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Fuse per-model YOLO detection files for one page");
  std::vector<std::string> fuse_files;
  std::string fuse_page, fuse_image, fuse_out;
  int fuse_w = 0, fuse_h = 0;
  FusionConfig fcfg;
  fuse->add_option("files", fuse_files, "detection files, one per model (detections/<model>/<id>.txt)")->required();
  fuse->add_option("--page-id", fuse_page);
  fuse->add_option("--image", fuse_image, "page image, supplies the dimensions");
  fuse->add_option("--width", fuse_w);
  fuse->add_option("--height", fuse_h);
  fuse->add_option("--iou", fcfg.iou_threshold, "grouping IoU threshold")->capture_default_str();
  fuse->add_option("--dup-iou", fcfg.duplicate_iou_threshold, "duplicate suppression IoU")->capture_default_str();
  fuse->add_option("--out", fuse_out, "output YOLO file (stdout when omitted)");

  // ocr
  auto* ocr = app.add_subcommand("ocr", "Transcribe one page image");
  std::string engine = "stub", mode = "layout", dets, image, ocr_out, pipeline, page_id;
  int ocr_workers = 1;
  ocr->add_option("--engine", engine, "'stub' or a command template containing {image}")->capture_default_str();
  ocr->add_option("--mode", mode)->check(CLI::IsMember({"layout", "fullpage"}))->capture_default_str();
  ocr->add_option("--detections", dets);
  ocr->add_option("--image", image)->required();
  ocr->add_option("--out", ocr_out, "transcript JSON (stdout when omitted)");
  ocr->add_option("--workers", ocr_workers)->check(CLI::PositiveNumber);
  ocr->add_option("--pipeline", pipeline, "pipeline id stored in the transcript");
  ocr->add_option("--page-id", page_id);

  // eval
  auto* eval = app.add_subcommand("eval", "Score transcript files with SCS, RED and TRS");
  std::vector<std::string> transcripts;
  std::string vocab_path, eval_out, unit = "word";
  NgramConfig ngram;
  TrsOptions trs;
  eval->add_option("transcripts", transcripts)->required();
  eval->add_option("--vocab", vocab_path)->required();
  eval->add_option("--ngram-unit", unit)->check(CLI::IsMember({"word", "character"}));
  eval->add_option("--ngram-n", ngram.n)->check(CLI::PositiveNumber);
  eval->add_flag("--trs-exact", trs.exact, "compare region texts byte for byte");
  eval->add_option("--out", eval_out, "per-page CSV (stdout when omitted)");

  // report
  auto* report = app.add_subcommand("report", "Aggregate per-page metric CSVs");
  std::vector<std::string> page_csvs;
  std::string report_out;
  report->add_option("pages", page_csvs)->required();
  report->add_option("--out", report_out, "output directory")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic pages with pseudo-annotations");
  SynthOptions sopt;
  std::string geometry, synth_out;
  synth->add_option("--pages", sopt.pages)->required();
  synth->add_option("--width", sopt.width)->capture_default_str();
  synth->add_option("--height", sopt.height)->capture_default_str();
  synth->add_option("--seed", sopt.seed)->capture_default_str();
  synth->add_option("--geometry", geometry, "directory of annotated YOLO label files")->required();
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--workers", sopt.workers)->check(CLI::PositiveNumber);
  synth->add_flag("--augment", sopt.augment, "write augmented crops of underrepresented classes");

  // det-eval
  auto* deval = app.add_subcommand("det-eval", "AP / mAP of predictions against ground truth");
  std::string pred_dir, gt_dir, deval_out;
  int dw = 1000, dh = 1000;
  deval->add_option("--pred", pred_dir)->required();
  deval->add_option("--gt", gt_dir)->required();
  deval->add_option("--width", dw, "page width used to denormalize (IoU does not depend on it)");
  deval->add_option("--height", dh);
  deval->add_option("--out", deval_out);

  // run
  auto* run = app.add_subcommand("run", "Full pipeline over a corpus: fuse, OCR, score, report");
  std::string config_path, run_out, corpus, run_vocab, run_engine;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  run->add_option("--config", config_path)->required();
  run->add_option("--seed", seed);
  run->add_option("--workers", workers)->check(CLI::PositiveNumber);
  run->add_option("--out", run_out);
  run->add_option("--corpus", corpus);
  run->add_option("--vocab", run_vocab);
  run->add_option("--engine", run_engine);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*fuse) return cmd_fuse(fuse_files, fuse_page, fuse_w, fuse_h, fuse_image, fcfg, fuse_out);
    if (*ocr) return cmd_ocr(engine, mode, dets, image, ocr_out, ocr_workers, pipeline, page_id);
    if (*eval) {
      ngram.unit = unit == "word" ? NgramUnit::word : NgramUnit::character;
      return cmd_eval(transcripts, vocab_path, ngram, trs, eval_out);
    }
    if (*report) return cmd_report(page_csvs, report_out);
    if (*synth) return cmd_synth(sopt, geometry, synth_out);
    if (*deval) return cmd_det_eval(pred_dir, gt_dir, dw, dh, deval_out);
    if (*run) return cmd_run(config_path, seed, workers, run_out, corpus, run_vocab, run_engine);
  } catch (const std::exception& e) {
    std::cerr << "layocr: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
