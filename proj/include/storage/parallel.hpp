#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace storage {

// Global worker cap, settable from the CLI's --threads flag.
inline std::atomic<int>& max_threads() {
  static std::atomic<int> n{int(std::thread::hardware_concurrency())};
  return n;
}

inline void set_max_threads(int n) { max_threads() = std::max(1, n); }

// Static block partition over [begin, end). Each invocation of fn writes only
// its own indices, so the result is independent of the schedule.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
  const std::size_t count = end > begin ? end - begin : 0;
  int nthreads = std::min<int>(max_threads().load(), int(count));
  if (nthreads <= 1 || count < 64) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(nthreads);
  const std::size_t chunk = (count + nthreads - 1) / nthreads;
  for (int t = 0; t < nthreads; ++t) {
    const std::size_t lo = begin + chunk * std::size_t(t);
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace storage
