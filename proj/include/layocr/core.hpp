#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "layocr/error.hpp"

namespace layocr {

// Corner-form pixel rectangle, top-left origin.
struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  bool is_finite() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2);
  }
  bool is_valid() const {
    return is_finite() && x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

enum class RegionLabel { article = 0, headline = 1, subheading = 2, advertisement = 3 };

inline constexpr std::array<RegionLabel, 4> all_labels = {
    RegionLabel::article, RegionLabel::headline, RegionLabel::subheading,
    RegionLabel::advertisement};

inline std::string_view to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::article: return "article";
    case RegionLabel::headline: return "headline";
    case RegionLabel::subheading: return "subheading";
    case RegionLabel::advertisement: return "advertisement";
  }
  return "article";
}

inline RegionLabel parse_label(std::string_view s) {
  for (auto label : all_labels)
    if (to_string(label) == s) return label;
  throw ParseError("unknown region label '" + std::string(s) + "'");
}

inline int label_index(RegionLabel label) { return static_cast<int>(label); }

inline RegionLabel label_from_index(long idx) {
  if (idx < 0 || idx > 3)
    throw ParseError("class index " + std::to_string(idx) + " outside 0..3");
  return static_cast<RegionLabel>(idx);
}

struct Detection {
  BBox bbox;
  RegionLabel label = RegionLabel::article;
  double confidence = 1.0;
  std::string source_model;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionSet {
  std::string page_id;
  int image_width = 0;
  int image_height = 0;
  std::vector<Detection> detections;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

struct RegionTranscript {
  BBox bbox;
  RegionLabel label = RegionLabel::article;
  std::string ocr_text;
  double confidence = 1.0;

  friend bool operator==(const RegionTranscript&, const RegionTranscript&) = default;
};

struct PageTranscript {
  std::string page_id;
  std::string pipeline_id;
  std::vector<RegionTranscript> regions;

  friend bool operator==(const PageTranscript&, const PageTranscript&) = default;
};

// ---------------------------------------------------------------------------
// validation

struct Violation {
  std::optional<std::size_t> index;  // empty for page-level rules
  std::string rule;
  std::string message;
};

inline std::vector<Violation> validate_detection_set(const DetectionSet& ds) {
  std::vector<Violation> out;
  if (ds.image_width <= 0 || ds.image_height <= 0)
    out.push_back({std::nullopt, "page dimensions", "image dimensions must be positive"});
  for (std::size_t i = 0; i < ds.detections.size(); ++i) {
    const auto& d = ds.detections[i];
    const auto& b = d.bbox;
    auto at = [&](std::string rule, std::string msg) {
      out.push_back({i, std::move(rule), "detection " + std::to_string(i) + ": " + std::move(msg)});
    };
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
      at("confidence range", "confidence must lie in [0,1]");
    if (!b.is_finite() || b.x1 < 0 || b.y1 < 0 || b.x2 < 0 || b.y2 < 0)
      at("coordinate range", "coordinates must be finite and non-negative");
    if (!(b.x1 < b.x2) || !(b.y1 < b.y2))
      at("degenerate box", "box must have x1 < x2 and y1 < y2");
    if (ds.image_width > 0 && ds.image_height > 0 &&
        (b.x2 > ds.image_width || b.y2 > ds.image_height))
      at("page bounds", "box extends past the page");
  }
  return out;
}

inline BBox clamp_to_page(const BBox& b, int width, int height) {
  if (width <= 0 || height <= 0) throw Error("clamp_to_page: page dimensions must be positive");
  auto clip = [](double v, double hi) { return std::clamp(v, 0.0, hi); };
  BBox c{clip(b.x1, width), clip(b.y1, height), clip(b.x2, width), clip(b.y2, height)};
  if (!c.is_finite() || !(c.x1 < c.x2) || !(c.y1 < c.y2))
    throw DegenerateBox("box has zero area after clamping to " + std::to_string(width) + "x" +
                        std::to_string(height));
  return c;
}

// ---------------------------------------------------------------------------
// YOLO text form: `class cx cy w h [confidence]`, geometry normalized to [0,1].

inline DetectionSet parse_yolo(std::string_view text, std::string page_id, int width, int height,
                               std::string source_model = {},
                               std::vector<std::string>* warnings = nullptr) {
  if (width <= 0 || height <= 0) throw ParseError("page dimensions must be positive");
  DetectionSet ds{std::move(page_id), width, height, {}};
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    auto where = [&] { return ds.page_id + ":" + std::to_string(lineno); };
    if (tok.size() != 5 && tok.size() != 6)
      throw ParseError(where() + ": expected 5 or 6 fields, got " + std::to_string(tok.size()));
    std::array<double, 6> v{};
    for (std::size_t i = 0; i < tok.size(); ++i) {
      std::size_t used = 0;
      try {
        v[i] = std::stod(tok[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok[i].size() || !std::isfinite(v[i]))
        throw ParseError(where() + ": bad number '" + tok[i] + "'");
    }
    if (v[0] != std::floor(v[0])) throw ParseError(where() + ": class index must be an integer");
    Detection d;
    d.label = label_from_index(static_cast<long>(v[0]));
    d.confidence = tok.size() == 6 ? v[5] : 1.0;
    if (d.confidence < 0 || d.confidence > 1)
      throw ParseError(where() + ": confidence outside [0,1]");
    d.source_model = source_model;
    const double cx = v[1] * width, cy = v[2] * height;
    const double bw = v[3] * width, bh = v[4] * height;
    BBox raw{cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2};
    try {
      d.bbox = clamp_to_page(raw, width, height);
    } catch (const DegenerateBox&) {
      if (warnings) warnings->push_back(where() + ": box outside page dropped");
      continue;
    }
    ds.detections.push_back(std::move(d));
  }
  return ds;
}

inline std::string serialize_yolo(const DetectionSet& ds, bool with_confidence = true) {
  std::string out;
  char buf[160];
  const double w = ds.image_width, h = ds.image_height;
  for (const auto& d : ds.detections) {
    const auto& b = d.bbox;
    int n = std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f", label_index(d.label),
                          (b.x1 + b.x2) / 2 / w, (b.y1 + b.y2) / 2 / h, b.width() / w,
                          b.height() / h);
    out.append(buf, n);
    if (with_confidence) {
      n = std::snprintf(buf, sizeof buf, " %.6f", d.confidence);
      out.append(buf, n);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

using json = nlohmann::json;

inline json bbox_to_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

inline BBox bbox_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("bbox must be an array of 4 numbers");
  for (const auto& v : j)
    if (!v.is_number()) throw ParseError("bbox must be an array of 4 numbers");
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.is_valid()) throw ParseError("bbox is degenerate or has negative coordinates");
  return b;
}

inline double confidence_from_json(const json& j) {
  if (!j.is_number()) throw ParseError("confidence must be a number");
  double c = j.get<double>();
  if (!(c >= 0 && c <= 1)) throw ParseError("confidence outside [0,1]");
  return c;
}

inline json to_json(const RegionTranscript& r) {
  return json{{"bbox", bbox_to_json(r.bbox)},
              {"label", std::string(to_string(r.label))},
              {"ocr_text", r.ocr_text},
              {"confidence", r.confidence}};
}

inline RegionTranscript region_from_json(const json& j) {
  if (!j.is_object() || j.size() != 4 || !j.contains("bbox") || !j.contains("label") ||
      !j.contains("ocr_text") || !j.contains("confidence"))
    throw ParseError("transcript record needs exactly bbox, label, ocr_text, confidence");
  if (!j["label"].is_string() || !j["ocr_text"].is_string())
    throw ParseError("label and ocr_text must be strings");
  return {bbox_from_json(j["bbox"]), parse_label(j["label"].get<std::string>()),
          j["ocr_text"].get<std::string>(), confidence_from_json(j["confidence"])};
}

inline json to_json(const PageTranscript& p) {
  json regions = json::array();
  for (const auto& r : p.regions) regions.push_back(to_json(r));
  return json{{"page_id", p.page_id}, {"pipeline_id", p.pipeline_id}, {"regions", regions}};
}

inline PageTranscript page_from_json(const json& j) {
  if (!j.is_object() || !j.contains("page_id") || !j.contains("pipeline_id") ||
      !j.contains("regions") || !j["regions"].is_array())
    throw ParseError("page transcript needs page_id, pipeline_id and a regions array");
  PageTranscript p{j["page_id"].get<std::string>(), j["pipeline_id"].get<std::string>(), {}};
  for (const auto& r : j["regions"]) p.regions.push_back(region_from_json(r));
  return p;
}

inline json to_json(const DetectionSet& ds) {
  json dets = json::array();
  for (const auto& d : ds.detections)
    dets.push_back({{"bbox", bbox_to_json(d.bbox)},
                    {"label", std::string(to_string(d.label))},
                    {"confidence", d.confidence},
                    {"source_model", d.source_model}});
  return json{{"page_id", ds.page_id},
              {"image_width", ds.image_width},
              {"image_height", ds.image_height},
              {"detections", dets}};
}

inline DetectionSet detection_set_from_json(const json& j) {
  try {
    DetectionSet ds{j.at("page_id").get<std::string>(), j.at("image_width").get<int>(),
                    j.at("image_height").get<int>(), {}};
    for (const auto& d : j.at("detections"))
      ds.detections.push_back({bbox_from_json(d.at("bbox")),
                               parse_label(d.at("label").get<std::string>()),
                               confidence_from_json(d.at("confidence")),
                               d.value("source_model", std::string{})});
    return ds;
  } catch (const json::exception& e) {
    throw ParseError(std::string("detection set: ") + e.what());
  }
}

}  // namespace layocr
