#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace thbheat {

/// Process-wide worker count used by the cell loops (default 1).
inline std::atomic<int> &thread_count() {
  static std::atomic<int> n{1};
  return n;
}

inline void set_thread_count(int n) { thread_count() = std::max(1, n); }

/// Run body(k) for k in [0, n). Work is split into contiguous blocks; callers
/// write into per-index slots and merge sequentially, so results do not depend
/// on scheduling.
template <class Body> void parallel_for(std::size_t n, Body &&body) {
  const auto workers = static_cast<std::size_t>(std::max(1, thread_count().load()));
  if (workers == 1 || n < 2 * workers) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(n, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t k = lo; k < hi; ++k) body(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

} // namespace thbheat
