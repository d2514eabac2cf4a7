#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "layocr/core.hpp"

namespace layocr {

struct FusionConfig {
  double iou_threshold = 0.7;
  double duplicate_iou_threshold = 0.9;

  void validate() const {
    if (!(iou_threshold > 0 && iou_threshold <= 1) ||
        !(duplicate_iou_threshold > 0 && duplicate_iou_threshold <= 1))
      throw ConfigError("fusion thresholds must lie in (0,1]");
  }
};

struct FusedBox {
  BBox bbox;
  RegionLabel label = RegionLabel::article;
  double confidence = 0;
  int member_count = 0;
  std::vector<std::string> member_sources;

  friend bool operator==(const FusedBox&, const FusedBox&) = default;
};

inline double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? std::min(1.0, inter / uni) : 0.0;
}

namespace detail {

// Total order used for every tie-break: confidence desc, then x1, y1, label,
// then the remaining coordinates so that distinct boxes never compare equal.
inline auto rank_key(const BBox& b, RegionLabel l, double conf) {
  return std::make_tuple(-conf, b.x1, b.y1, static_cast<int>(l), b.x2, b.y2);
}

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

}  // namespace detail

// Connected components of the same-label IoU >= threshold graph. Groups hold
// input indices in ascending order and are ordered by their first index.
inline std::vector<std::vector<std::size_t>> group_boxes(const std::vector<Detection>& dets,
                                                         const FusionConfig& cfg = {}) {
  const std::size_t n = dets.size();
  detail::DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dets[i].label == dets[j].label && iou(dets[i].bbox, dets[j].bbox) >= cfg.iou_threshold)
        sets.unite(i, j);
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = sets.find(i);
    if (slot[root] == n) {
      slot[root] = groups.size();
      groups.emplace_back();
    }
    groups[slot[root]].push_back(i);
  }
  return groups;
}

inline FusedBox fuse_group(std::vector<Detection> group) {
  if (group.empty()) throw Error("fuse_group: empty group");
  const auto label = group.front().label;
  for (const auto& d : group)
    if (d.label != label) throw Error("fuse_group: mixed labels in group");

  // canonical member order makes the floating-point sums order independent
  std::sort(group.begin(), group.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.confidence, a.bbox.x1, a.bbox.y1, a.bbox.x2, a.bbox.y2, a.source_model) >
           std::tie(b.confidence, b.bbox.x1, b.bbox.y1, b.bbox.x2, b.bbox.y2, b.source_model);
  });

  double wsum = 0, csum = 0;
  for (const auto& d : group) {
    wsum += d.confidence;
    csum += d.confidence;
  }
  const bool unweighted = wsum <= 0;  // all-zero confidences
  if (unweighted) wsum = static_cast<double>(group.size());

  auto coord = [&](double BBox::*field) {
    double acc = 0, lo = group.front().bbox.*field, hi = lo;
    for (const auto& d : group) {
      const double w = unweighted ? 1.0 : d.confidence;
      acc += w * (d.bbox.*field);
      lo = std::min(lo, d.bbox.*field);
      hi = std::max(hi, d.bbox.*field);
    }
    return std::clamp(acc / wsum, lo, hi);
  };

  FusedBox out;
  out.bbox = {coord(&BBox::x1), coord(&BBox::y1), coord(&BBox::x2), coord(&BBox::y2)};
  out.label = label;
  out.confidence = csum / static_cast<double>(group.size());
  out.member_count = static_cast<int>(group.size());
  for (const auto& d : group) out.member_sources.push_back(d.source_model);
  std::sort(out.member_sources.begin(), out.member_sources.end());
  return out;
}

inline void sort_by_rank(std::vector<FusedBox>& boxes) {
  std::stable_sort(boxes.begin(), boxes.end(), [](const FusedBox& a, const FusedBox& b) {
    return detail::rank_key(a.bbox, a.label, a.confidence) <
           detail::rank_key(b.bbox, b.label, b.confidence);
  });
}

inline std::vector<FusedBox> suppress_near_duplicates(std::vector<FusedBox> boxes,
                                                      const FusionConfig& cfg = {}) {
  sort_by_rank(boxes);
  std::vector<FusedBox> kept;
  for (auto& b : boxes) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const FusedBox& k) {
      return k.label == b.label && iou(k.bbox, b.bbox) >= cfg.duplicate_iou_threshold;
    });
    if (!dup) kept.push_back(std::move(b));
  }
  return kept;
}

// Group, fuse and suppress in one pass; output is ordered by rank.
inline std::vector<FusedBox> fuse_boxes(const std::vector<Detection>& dets,
                                        const FusionConfig& cfg = {}) {
  cfg.validate();
  std::vector<FusedBox> fused;
  for (const auto& g : group_boxes(dets, cfg)) {
    std::vector<Detection> members;
    for (auto i : g) members.push_back(dets[i]);
    fused.push_back(fuse_group(std::move(members)));
  }
  return suppress_near_duplicates(std::move(fused), cfg);
}

inline DetectionSet fuse_detections(const std::vector<DetectionSet>& per_model,
                                    const FusionConfig& cfg = {}) {
  if (per_model.empty()) throw PageMismatch("fuse_detections: no detection sets");
  const auto& first = per_model.front();
  std::vector<Detection> all;
  for (const auto& ds : per_model) {
    if (ds.page_id != first.page_id || ds.image_width != first.image_width ||
        ds.image_height != first.image_height)
      throw PageMismatch("cannot fuse page '" + ds.page_id + "' with page '" + first.page_id +
                         "' (ids or dimensions differ)");
    all.insert(all.end(), ds.detections.begin(), ds.detections.end());
  }
  DetectionSet out{first.page_id, first.image_width, first.image_height, {}};
  for (auto& f : fuse_boxes(all, cfg)) {
    std::string src;
    for (const auto& s : f.member_sources) {
      if (!src.empty()) src += '+';
      src += s;
    }
    out.detections.push_back({f.bbox, f.label, f.confidence, std::move(src)});
  }
  return out;
}

}  // namespace layocr
