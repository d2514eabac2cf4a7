#pragma once

// Reference evaluations used only by the tests. Each one takes a different
// route from the library code it checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "layocr/core.hpp"
#include "layocr/image.hpp"

namespace oracle {

using layocr::BBox;
using layocr::Detection;
using Fraction = boost::rational<long long>;

// Intersection through the 1-D overlap identity |A∩B| = |A| + |B| - |A∪B|
// on each axis.
inline double iou(const BBox& a, const BBox& b) {
  const double span_x = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double span_y = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double ox = std::max(0.0, a.width() + b.width() - span_x);
  const double oy = std::max(0.0, a.height() + b.height() - span_y);
  const double inter = ox * oy;
  return inter / (a.area() + b.area() - inter);
}

// Transitive closure of the same-label IoU graph (Floyd–Warshall), then
// groups keyed by their smallest member.
inline std::vector<std::vector<std::size_t>> closure_groups(const std::vector<Detection>& d,
                                                            double thr) {
  const std::size_t n = d.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      reach[i][j] = i == j || (d[i].label == d[j].label && oracle::iou(d[i].bbox, d[j].bbox) >= thr);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i]) continue;
    std::vector<std::size_t> g;
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i][j]) {
        g.push_back(j);
        seen[j] = true;
      }
    groups.push_back(g);
  }
  return groups;
}

// A region generated from known words, so the oracle never tokenizes.
struct KnownRegion {
  std::vector<std::string> words;
  std::string text;
};

// Mean per-region vocabulary hit rate in exact rational arithmetic.
inline std::optional<Fraction> scs(const std::vector<KnownRegion>& regions,
                                   const std::vector<std::string>& vocab) {
  Fraction sum = 0;
  long long n = 0;
  for (const auto& r : regions) {
    if (r.words.empty()) continue;
    long long hits = 0;
    for (const auto& w : r.words)
      hits += std::find(vocab.begin(), vocab.end(), w) != vocab.end();
    sum += Fraction(hits, static_cast<long long>(r.words.size()));
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// Share of ordered region pairs with equal canonical content, as a literal double loop.
inline double trs(const std::vector<std::string>& canonical) {
  const long long n = static_cast<long long>(canonical.size());
  if (n <= 1) return 0.0;
  long long same = 0;
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < n; ++j)
      if (i != j && canonical[i] == canonical[j]) ++same;
  return double(same) / double(n * (n - 1));
}

// Shannon entropy in bits, directly from a list of observed n-grams.
inline double entropy_bits(const std::vector<std::string>& grams) {
  if (grams.empty()) return 0.0;
  std::map<std::string, double> p;
  for (const auto& g : grams) p[g] += 1.0 / double(grams.size());
  double h = 0;
  for (const auto& [g, v] : p) h += -v * std::log(v) / std::log(2.0);
  return h;
}

// Per-pixel local mean over the in-image part of a window, brute force.
inline layocr::GrayImage mean_threshold(const layocr::GrayImage& img, int window, int offset) {
  layocr::GrayImage out(img.width(), img.height());
  const int r = window / 2;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      long long sum = 0, count = 0;
      for (int yy = y - r; yy <= y + r; ++yy)
        for (int xx = x - r; xx <= x + r; ++xx)
          if (xx >= 0 && yy >= 0 && xx < img.width() && yy < img.height()) {
            sum += img.at(xx, yy);
            ++count;
          }
      const Fraction mean(sum, count);
      out.at(x, y) = Fraction(img.at(x, y)) < mean - Fraction(offset) ? 0 : 255;
    }
  return out;
}

// All-point AP from TP flags in rank order: each true positive contributes
// 1/n_gt times the best precision at any rank at or after it.
inline double ap_from_flags(const std::vector<bool>& tp_in_rank_order, std::size_t n_gt) {
  double ap = 0;
  const std::size_t n = tp_in_rank_order.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!tp_in_rank_order[i]) continue;
    double best = 0;
    std::size_t tp = 0;
    for (std::size_t j = 0; j < n; ++j) {
      tp += tp_in_rank_order[j];
      if (j >= i) best = std::max(best, double(tp) / double(j + 1));
    }
    ap += best / double(n_gt);
  }
  return ap;
}

}  // namespace oracle
