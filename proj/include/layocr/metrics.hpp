#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "layocr/core.hpp"
#include "layocr/text.hpp"

namespace layocr {

class Vocabulary {
 public:
  Vocabulary(std::unordered_set<std::string> words, std::string source)
      : words_(std::move(words)), source_(std::move(source)) {
    if (words_.empty()) throw ConfigError("vocabulary '" + source_ + "' is empty");
  }

  // One word per line; blank lines and `#` comments skipped.
  static Vocabulary from_text(std::string_view content, std::string source = "<memory>") {
    std::unordered_set<std::string> words;
    for (const auto& line : text::split_lines(content)) {
      auto w = text::trim(line);
      if (w.empty() || w.front() == '#') continue;
      words.insert(text::lowercase(w));
    }
    return Vocabulary(std::move(words), std::move(source));
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open vocabulary file '" + path + "'");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_text(content, path);
  }

  bool contains(const std::string& word) const { return words_.count(word) > 0; }
  std::size_t size() const { return words_.size(); }
  const std::string& source() const { return source_; }

 private:
  std::unordered_set<std::string> words_;
  std::string source_;
};

enum class NgramUnit { word, character };

struct NgramConfig {
  NgramUnit unit = NgramUnit::word;
  int n = 1;

  void validate() const {
    if (n < 1) throw ConfigError("n-gram order must be >= 1");
  }
};

struct NgramDistribution {
  std::map<std::string, long long> counts;
  long long total = 0;

  double probability(const std::string& g) const {
    auto it = counts.find(g);
    return it == counts.end() || total == 0 ? 0.0 : double(it->second) / double(total);
  }
};

struct MetricsRecord {
  std::string page_id;
  std::string pipeline_id;
  std::optional<double> scs;
  double red = 0;
  double trs = 0;
  int region_count = 0;
};

// Lowercased maximal runs of alphabetic code points.
inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (auto cp : text::decode_utf8(s)) {
    if (text::is_alpha(cp)) {
      text::append_utf8(cur, text::to_lower(cp));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Mean in-vocabulary token fraction over regions that have tokens.
inline std::optional<double> scs(const PageTranscript& page, const Vocabulary& vocab) {
  double sum = 0;
  int scored = 0;
  for (const auto& r : page.regions) {
    const auto tokens = tokenize(r.ocr_text);
    if (tokens.empty()) continue;
    std::size_t hits = 0;
    for (const auto& t : tokens) hits += vocab.contains(t);
    sum += double(hits) / double(tokens.size());
    ++scored;
  }
  if (scored == 0) return std::nullopt;
  return sum / scored;
}

inline NgramDistribution ngram_distribution(const PageTranscript& page,
                                            const NgramConfig& cfg = {}) {
  cfg.validate();
  NgramDistribution dist;
  const auto n = static_cast<std::size_t>(cfg.n);
  for (const auto& r : page.regions) {
    if (cfg.unit == NgramUnit::word) {
      const auto tokens = tokenize(r.ocr_text);
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g = tokens[i];
        for (std::size_t k = 1; k < n; ++k) g += ' ' + tokens[i + k];
        ++dist.counts[g];
        ++dist.total;
      }
    } else {
      const auto cps = text::decode_utf8(r.ocr_text);
      for (std::size_t i = 0; i + n <= cps.size(); ++i) {
        ++dist.counts[text::encode_utf8(std::u32string_view(cps).substr(i, n))];
        ++dist.total;
      }
    }
  }
  return dist;
}

// Shannon entropy of the n-gram distribution, in bits.
inline double red(const NgramDistribution& dist) {
  if (dist.total == 0) return 0.0;
  double h = 0;
  for (const auto& [g, c] : dist.counts) {
    const double p = double(c) / double(dist.total);
    h -= p * std::log2(p);
  }
  return h <= 0 ? 0.0 : h;
}

struct TrsOptions {
  bool exact = false;  // compare raw bytes instead of normalized text
};

// Fraction of ordered region pairs with equal text.
inline double trs(const PageTranscript& page, TrsOptions opt = {}) {
  const auto n = page.regions.size();
  if (n <= 1) return 0.0;
  std::map<std::string, long long> freq;
  for (const auto& r : page.regions)
    ++freq[opt.exact ? r.ocr_text : text::normalize(r.ocr_text)];
  long long pairs = 0;
  for (const auto& [t, k] : freq) pairs += k * (k - 1);
  return double(pairs) / (double(n) * double(n - 1));
}

inline MetricsRecord evaluate_page(const PageTranscript& page, const Vocabulary& vocab,
                                   const NgramConfig& cfg = {}, TrsOptions opt = {}) {
  return {page.page_id,
          page.pipeline_id,
          scs(page, vocab),
          red(ngram_distribution(page, cfg)),
          trs(page, opt),
          static_cast<int>(page.regions.size())};
}

struct AggregateRow {
  std::string pipeline_id;
  int pages = 0;
  int scs_pages = 0;
  std::optional<double> scs_mean;
  double red_mean = 0;
  double trs_mean = 0;
};

// Per-pipeline means, rows ordered by pipeline id.
inline std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records) {
  struct Acc {
    int pages = 0, scs_pages = 0;
    double scs = 0, red = 0, trs = 0;
  };
  std::map<std::string, Acc> by;
  for (const auto& r : records) {
    auto& a = by[r.pipeline_id];
    ++a.pages;
    a.red += r.red;
    a.trs += r.trs;
    if (r.scs) {
      ++a.scs_pages;
      a.scs += *r.scs;
    }
  }
  std::vector<AggregateRow> rows;
  for (const auto& [id, a] : by) {
    AggregateRow row{id, a.pages, a.scs_pages, std::nullopt, a.red / a.pages, a.trs / a.pages};
    if (a.scs_pages > 0) row.scs_mean = a.scs / a.scs_pages;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace layocr
