#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace layocr {

// Runs fn(i) for i in [0, count) on at most `workers` threads. fn must not
// throw; callers record failures in per-index slots.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const auto width = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (width <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(width);
  for (std::size_t t = 0; t < width; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
    });
}

}  // namespace layocr
