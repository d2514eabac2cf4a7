#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string_view>

// Synthetic pages draw each word as a dark block whose width encodes an index
// into a fixed lexicon. The stub OCR engine reads the widths back, so rendered
// text survives small crop offsets and binarization.
namespace layocr::stripe_code {

inline constexpr int unit = 3;       // px per width step
inline constexpr int word_gap = 6;   // px between blocks

inline constexpr std::array<std::string_view, 32> lexicon = {
    "the",     "of",      "and",     "to",      "in",      "a",       "that",    "is",
    "for",     "it",      "as",      "was",     "with",    "be",      "by",      "on",
    "not",     "his",     "this",    "are",     "freedom", "people",  "paper",   "colored",
    "liberty", "meeting", "tbe",     "aud",     "wbich",   "tlie",    "ofthe",   "qzx"};

inline constexpr int block_width(int index) { return unit * (index + 2); }

inline std::optional<int> decode_width(int width_px) {
  const long k = std::lround(double(width_px) / unit) - 2;
  if (k < 0 || k >= static_cast<long>(lexicon.size())) return std::nullopt;
  return static_cast<int>(k);
}

}  // namespace layocr::stripe_code
