#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "layocr/core.hpp"
#include "layocr/image.hpp"
#include "layocr/parallel.hpp"
#include "layocr/preprocess.hpp"
#include "layocr/stripe_code.hpp"
#include "layocr/text.hpp"

namespace layocr {

struct OcrResult {
  std::string text;
  double confidence = 1.0;
};

// Recognizes text in a grayscale image. Implementations must be deterministic
// for identical pixels and safe to call from several threads.
class OcrEngine {
 public:
  virtual ~OcrEngine() = default;
  virtual OcrResult recognize(const GrayImage& img) const = 0;
};

// In-process engine for tests and offline runs: finds text lines as runs of
// inked rows and decodes word blocks with stripe_code. Lines touching the top
// or bottom edge are treated as cut off and skipped.
class StubEngine final : public OcrEngine {
 public:
  OcrResult recognize(const GrayImage& img) const override {
    const int w = img.width(), h = img.height();
    auto dark = [&](int x, int y) { return img.at(x, y) < 128; };
    std::vector<int> row_ink(h, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) row_ink[y] += dark(x, y);

    std::string out;
    int words = 0, decoded = 0;
    for (int y = 0; y < h;) {
      if (row_ink[y] < 2) {
        ++y;
        continue;
      }
      const int top = y;
      while (y < h && row_ink[y] >= 2) ++y;
      const int bottom = y;  // exclusive
      if (bottom - top < 2 || top == 0 || bottom == h) continue;

      // a column is inked when at least half of the line's rows are dark there
      std::string line;
      int x = 0;
      while (x < w) {
        auto inked = [&](int cx) {
          int c = 0;
          for (int yy = top; yy < bottom; ++yy) c += dark(cx, yy);
          return 2 * c >= bottom - top;
        };
        if (!inked(x)) {
          ++x;
          continue;
        }
        const int start = x;
        while (x < w && inked(x)) ++x;
        const int width = x - start;
        if (width < stripe_code::unit) continue;
        ++words;
        if (!line.empty()) line += ' ';
        if (auto k = stripe_code::decode_width(width)) {
          ++decoded;
          line += stripe_code::lexicon[*k];
        } else {
          line += "~";
        }
      }
      if (line.empty()) continue;
      if (!out.empty()) out += '\n';
      out += line;
    }
    return {out, words == 0 ? 0.0 : double(decoded) / words};
  }
};

// Runs an external recognizer. `{image}` in the template is replaced with a
// temporary PNG path and stdout is taken as the text. When the template also
// contains `{meta}`, the command may write a sidecar file there whose second
// line holds the engine confidence.
class CommandEngine final : public OcrEngine {
 public:
  explicit CommandEngine(std::string command_template) : template_(std::move(command_template)) {
    if (template_.find("{image}") == std::string::npos)
      throw ConfigError("engine command template must contain {image}");
  }

  OcrResult recognize(const GrayImage& img) const override {
    namespace fs = std::filesystem;
    static std::atomic<unsigned long> counter{0};
    const auto stem = fs::temp_directory_path() /
                      ("layocr_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    const auto image_path = stem.string() + ".png";
    const auto meta_path = stem.string() + ".meta";
    write_png(img, image_path);
    struct Cleanup {
      std::string a, b;
      ~Cleanup() {
        std::error_code ec;
        std::filesystem::remove(a, ec);
        std::filesystem::remove(b, ec);
      }
    } cleanup{image_path, meta_path};

    std::string cmd = template_;
    replace_all(cmd, "{image}", image_path);
    replace_all(cmd, "{meta}", meta_path);

    std::FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw Error("cannot start engine command");
    std::string text;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) text.append(buf, n);
    const int status = ::pclose(pipe);
    if (status != 0) throw Error("engine command exited with status " + std::to_string(status));

    OcrResult res{std::move(text), 1.0};
    if (std::ifstream meta(meta_path); meta) {
      std::string first, second;
      std::getline(meta, first);
      if (std::getline(meta, second)) {
        try {
          res.confidence = std::clamp(std::stod(second), 0.0, 1.0);
        } catch (const std::exception&) {
        }
      }
    }
    return res;
  }

 private:
  static void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
      s.replace(pos, from.size(), to);
  }
  std::string template_;
};

inline std::unique_ptr<OcrEngine> make_engine(const std::string& spec) {
  if (spec.empty() || spec == "stub") return std::make_unique<StubEngine>();
  return std::make_unique<CommandEngine>(spec);
}

// ---------------------------------------------------------------------------

struct WindowConfig {
  int strip_height = 300;
  double overlap_fraction = 0.25;
  int tall_region_threshold = 400;

  void validate() const {
    if (strip_height <= 0) throw ConfigError("strip height must be positive");
    if (!(overlap_fraction >= 0 && overlap_fraction < 1))
      throw ConfigError("overlap fraction must lie in [0,1)");
  }
};

struct Window {
  int y_start = 0, y_end = 0;
  friend bool operator==(const Window&, const Window&) = default;
};

inline std::vector<Window> split_windows(int region_height, const WindowConfig& cfg = {}) {
  cfg.validate();
  if (region_height <= 0) throw Error("split_windows: region height must be positive");
  if (region_height <= cfg.tall_region_threshold || region_height <= cfg.strip_height)
    return {{0, region_height}};
  const int stride = std::max(
      1, static_cast<int>(std::lround(cfg.strip_height * (1.0 - cfg.overlap_fraction))));
  std::vector<Window> out;
  for (int start = 0;; start += stride) {
    if (start + cfg.strip_height >= region_height) {
      out.push_back({region_height - cfg.strip_height, region_height});
      break;
    }
    out.push_back({start, start + cfg.strip_height});
  }
  return out;
}

inline constexpr std::size_t dedupe_lookback = 5;

// Concatenates per-window lines, dropping any line whose normalized form
// matches one of the last five emitted lines. Blank lines are dropped.
inline std::vector<std::string> dedupe_lines(const std::vector<std::vector<std::string>>& windows) {
  std::vector<std::string> out;
  std::deque<std::string> recent;
  for (const auto& lines : windows)
    for (const auto& line : lines) {
      auto key = text::normalize(line);
      if (key.empty()) continue;
      if (std::find(recent.begin(), recent.end(), key) != recent.end()) continue;
      out.push_back(line);
      recent.push_back(std::move(key));
      if (recent.size() > dedupe_lookback) recent.pop_front();
    }
  return out;
}

struct RegionOcr {
  RegionTranscript transcript;
  std::vector<double> engine_confidences;  // one per window
};

// Small crops are padded with white up to the adaptive window before
// preprocessing and cropped back afterwards.
inline GrayImage preprocess_region(const GrayImage& crop, const PreprocessConfig& pcfg) {
  const int need = pcfg.adaptive_window;
  if (crop.width() >= need && crop.height() >= need) return preprocess(crop, pcfg);
  GrayImage padded(std::max(need, crop.width()), std::max(need, crop.height()), 255);
  for (int y = 0; y < crop.height(); ++y)
    for (int x = 0; x < crop.width(); ++x) padded.at(x, y) = crop.at(x, y);
  return preprocess(padded, pcfg).crop(0, 0, crop.width(), crop.height());
}

inline RegionOcr ocr_region(const GrayImage& page_image, const Detection& det,
                            const OcrEngine& engine, const WindowConfig& wcfg = {},
                            const PreprocessConfig& pcfg = {}, const std::string& region_id = {}) {
  const auto id = region_id.empty() ? std::string(to_string(det.label)) : region_id;
  try {
    const int x0 = static_cast<int>(std::floor(det.bbox.x1));
    const int y0 = static_cast<int>(std::floor(det.bbox.y1));
    const int x1 = static_cast<int>(std::ceil(det.bbox.x2));
    const int y1 = static_cast<int>(std::ceil(det.bbox.y2));
    const auto binary = preprocess_region(page_image.crop(x0, y0, x1, y1), pcfg);

    RegionOcr res;
    std::vector<std::vector<std::string>> window_lines;
    for (const auto& win : split_windows(binary.height(), wcfg)) {
      auto strip = binary.crop(0, win.y_start, binary.width(), win.y_end);
      auto r = engine.recognize(strip);
      res.engine_confidences.push_back(r.confidence);
      window_lines.push_back(text::split_lines(r.text));
    }
    std::string joined;
    for (const auto& line : dedupe_lines(window_lines)) {
      if (!joined.empty()) joined += '\n';
      joined += line;
    }
    res.transcript = {det.bbox, det.label, std::move(joined), det.confidence};
    return res;
  } catch (const EngineError&) {
    throw;
  } catch (const std::exception& e) {
    throw EngineError(id, e.what());
  }
}

enum class OcrMode { layout, fullpage };

struct TranscribeOptions {
  OcrMode mode = OcrMode::layout;
  WindowConfig window;
  PreprocessConfig preprocess;
  int workers = 1;
  std::string pipeline_id = "layout";
};

struct PageOcr {
  PageTranscript page;
  std::vector<std::vector<double>> engine_confidences;  // parallel to page.regions
  std::vector<EngineError> errors;
};

// Detections sorted into reading order: y1, then x1.
inline std::vector<Detection> reading_order(std::vector<Detection> dets) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.bbox.y1, a.bbox.x1, a.bbox.y2, a.bbox.x2) <
           std::tie(b.bbox.y1, b.bbox.x1, b.bbox.y2, b.bbox.x2);
  });
  return dets;
}

inline PageOcr transcribe_page(const GrayImage& page_image, const DetectionSet& detections,
                               const OcrEngine& engine, const TranscribeOptions& opt = {}) {
  std::vector<Detection> dets;
  if (opt.mode == OcrMode::fullpage) {
    dets.push_back({BBox{0, 0, double(page_image.width()), double(page_image.height())},
                    RegionLabel::article, 1.0, "fullpage"});
  } else {
    dets = reading_order(detections.detections);
  }

  std::vector<std::optional<RegionOcr>> done(dets.size());
  std::vector<std::optional<EngineError>> failed(dets.size());
  parallel_for(dets.size(), opt.workers, [&](std::size_t i) {
    const auto id = detections.page_id + "#" + std::to_string(i) + " (" +
                    std::string(to_string(dets[i].label)) + ")";
    try {
      done[i] = ocr_region(page_image, dets[i], engine, opt.window, opt.preprocess, id);
    } catch (const EngineError& e) {
      failed[i] = e;
    } catch (const std::exception& e) {
      failed[i] = EngineError(id, e.what());
    }
  });

  PageOcr out;
  out.page.page_id = detections.page_id;
  out.page.pipeline_id = opt.pipeline_id;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (done[i]) {
      out.page.regions.push_back(std::move(done[i]->transcript));
      out.engine_confidences.push_back(std::move(done[i]->engine_confidences));
    } else {
      out.errors.push_back(std::move(*failed[i]));
    }
  }
  if (!dets.empty() && out.page.regions.empty())
    throw Error("page '" + detections.page_id + "': all " + std::to_string(dets.size()) +
                " regions failed OCR; first error: " + out.errors.front().what());
  return out;
}

}  // namespace layocr
