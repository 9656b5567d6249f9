#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace subsketch {

/// Worker count: hardware concurrency, capped by SUBSKETCH_THREADS.
inline unsigned thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SUBSKETCH_THREADS")) {
    try {
      long v = std::stol(env);
      if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    } catch (...) {
    }
  }
  return n;
}

/// Runs f(i) for i in [0, n).  Each index is handled by exactly one worker,
/// so callers writing to slot i get results independent of the thread count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const unsigned t = std::min<std::size_t>(thread_count(), n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (unsigned w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += t) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace subsketch
