#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "layocr/core.hpp"
#include "layocr/fusion.hpp"

namespace layocr {

struct DetEvalConfig {
  std::vector<double> iou_thresholds{0.5};

  static DetEvalConfig at50() { return {{0.5}}; }
  static DetEvalConfig at50_95() {
    DetEvalConfig c{{}};
    for (int k = 0; k < 10; ++k) c.iou_thresholds.push_back((50 + 5 * k) / 100.0);
    return c;
  }

  void validate() const {
    if (iou_thresholds.empty()) throw ConfigError("at least one IoU threshold is required");
    for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
      const double t = iou_thresholds[i];
      if (!(t > 0 && t <= 1)) throw ConfigError("IoU thresholds must lie in (0,1]");
      if (i > 0 && !(t > iou_thresholds[i - 1]))
        throw ConfigError("IoU thresholds must be strictly increasing");
    }
  }
};

struct MatchResult {
  std::vector<std::size_t> order;  // prediction indices, ranked
  std::vector<bool> true_positive;  // indexed by prediction index
};

namespace detail {
inline std::vector<std::size_t> rank_predictions(const std::vector<Detection>& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& p = preds[a];
    const auto& q = preds[b];
    return std::make_tuple(-p.confidence, p.bbox.x1, p.bbox.y1) <
           std::make_tuple(-q.confidence, q.bbox.x1, q.bbox.y1);
  });
  return order;
}
}  // namespace detail

// Greedy matching: each prediction, best first, takes the unmatched same-label
// ground truth with the highest IoU at or above the threshold.
inline MatchResult match_detections(const DetectionSet& preds, const DetectionSet& gts,
                                    double iou_thr) {
  MatchResult m{detail::rank_predictions(preds.detections),
                std::vector<bool>(preds.detections.size(), false)};
  std::vector<bool> used(gts.detections.size(), false);
  for (auto pi : m.order) {
    const auto& p = preds.detections[pi];
    double best = -1;
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < gts.detections.size(); ++g) {
      if (used[g] || gts.detections[g].label != p.label) continue;
      const double o = iou(p.bbox, gts.detections[g].bbox);
      if (o >= iou_thr && o > best) {
        best = o;
        best_g = g;
      }
    }
    if (best >= 0) {
      used[best_g] = true;
      m.true_positive[pi] = true;
    }
  }
  return m;
}

namespace detail {
inline DetectionSet only_label(const DetectionSet& ds, std::optional<RegionLabel> label) {
  if (!label) return ds;
  DetectionSet out{ds.page_id, ds.image_width, ds.image_height, {}};
  for (const auto& d : ds.detections)
    if (d.label == *label) out.detections.push_back(d);
  return out;
}
}  // namespace detail

// All-point interpolated AP pooled over pages (preds[i] pairs with gts[i]).
// Empty when there is neither ground truth nor any prediction; 0 when only
// ground truth is missing.
inline std::optional<double> average_precision(std::span<const DetectionSet> preds,
                                               std::span<const DetectionSet> gts, double iou_thr,
                                               std::optional<RegionLabel> label = std::nullopt) {
  if (preds.size() != gts.size()) throw PageMismatch("prediction and ground-truth page counts differ");
  struct Scored {
    double conf, x1, y1;
    std::size_t page;
    bool tp;
  };
  std::vector<Scored> scored;
  std::size_t n_gt = 0;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    const auto pr = detail::only_label(preds[p], label);
    const auto gt = detail::only_label(gts[p], label);
    n_gt += gt.detections.size();
    const auto m = match_detections(pr, gt, iou_thr);
    for (auto i : m.order) {
      const auto& d = pr.detections[i];
      scored.push_back({d.confidence, d.bbox.x1, d.bbox.y1, p, m.true_positive[i]});
    }
  }
  if (n_gt == 0) return scored.empty() ? std::nullopt : std::optional<double>(0.0);
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    return std::make_tuple(-a.conf, a.x1, a.y1, a.page) < std::make_tuple(-b.conf, b.x1, b.y1, b.page);
  });

  std::vector<double> precision(scored.size()), recall(scored.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    tp += scored[i].tp;
    precision[i] = double(tp) / double(i + 1);
    recall[i] = double(tp) / double(n_gt);
  }
  for (std::size_t i = scored.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return std::clamp(ap, 0.0, 1.0);
}

inline std::optional<double> average_precision(const DetectionSet& preds, const DetectionSet& gts,
                                               double iou_thr,
                                               std::optional<RegionLabel> label = std::nullopt) {
  return average_precision(std::span<const DetectionSet>(&preds, 1),
                           std::span<const DetectionSet>(&gts, 1), iou_thr, label);
}

struct ClassAp {
  RegionLabel label;
  double iou_threshold;
  double ap;
};

struct MapResult {
  std::vector<ClassAp> per_class;                           // classes with ground truth only
  std::vector<std::pair<double, double>> map_per_threshold;  // (threshold, mean over classes)
  std::optional<double> map;                                 // mean over thresholds
};

inline MapResult map_score(std::span<const DetectionSet> preds, std::span<const DetectionSet> gts,
                           const DetEvalConfig& cfg = {}) {
  cfg.validate();
  std::vector<RegionLabel> classes;
  for (auto label : all_labels) {
    bool has_gt = false;
    for (const auto& g : gts)
      for (const auto& d : g.detections) has_gt = has_gt || d.label == label;
    if (has_gt) classes.push_back(label);
  }
  MapResult res;
  if (classes.empty()) return res;
  double sum = 0;
  for (double thr : cfg.iou_thresholds) {
    double class_sum = 0;
    for (auto label : classes) {
      const double ap = average_precision(preds, gts, thr, label).value_or(0.0);
      res.per_class.push_back({label, thr, ap});
      class_sum += ap;
    }
    const double m = class_sum / double(classes.size());
    res.map_per_threshold.emplace_back(thr, m);
    sum += m;
  }
  res.map = sum / double(cfg.iou_thresholds.size());
  return res;
}

inline MapResult map_score(const DetectionSet& preds, const DetectionSet& gts,
                           const DetEvalConfig& cfg = {}) {
  return map_score(std::span<const DetectionSet>(&preds, 1), std::span<const DetectionSet>(&gts, 1), cfg);
}

}  // namespace layocr
