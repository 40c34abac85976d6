#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace fsgs {

inline std::atomic<int>& num_threads_slot() {
  static std::atomic<int> n{int(std::max(1u, std::thread::hardware_concurrency()))};
  return n;
}

inline void set_num_threads(int n) { num_threads_slot() = std::max(1, n); }
inline int num_threads() { return num_threads_slot(); }

// Splits [0, n) into one contiguous chunk per thread. The partition depends
// only on (n, thread count), so per-thread partial results can be reduced in
// thread order for run-to-run reproducibility.
inline void parallel_for_chunks(
    std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn) {
  int nt = std::min<std::size_t>(num_threads(), n == 0 ? 1 : n);
  if (nt <= 1) {
    fn(0, n, 0);
    return;
  }
  std::size_t chunk = (n + nt - 1) / nt;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    std::size_t b = std::min(n, std::size_t(t) * chunk);
    std::size_t e = std::min(n, b + chunk);
    pool.emplace_back([&fn, b, e, t] { fn(b, e, t); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace fsgs
