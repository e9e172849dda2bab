#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace optnet {

// Process-wide worker count for embarrassingly parallel sweeps.
// 0 means hardware concurrency. Results are always stored by index, so
// parallel runs are deterministic.
void set_thread_count(int n);
int thread_count();

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int workers = thread_count();
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(std::min<std::size_t>(workers, n));
  pool.reserve(spawn);
  for (int t = 0; t < spawn; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace optnet
