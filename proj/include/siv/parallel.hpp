#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace siv {

// Worker count from SIVSIM_THREADS (default 1, clamped to hardware).
inline int env_threads() {
  const char* s = std::getenv("SIVSIM_THREADS");
  if (!s) return 1;
  const int n = std::atoi(s);
  if (n <= 1) return 1;
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  return hw > 0 ? std::min(n, hw) : n;
}

// Runs fn(i) for i in [0, n). Results must go to disjoint slots so the
// outcome is independent of scheduling.
inline void parallel_for(int n, const std::function<void(int)>& fn,
                         int threads = env_threads()) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([=, &fn] {
      for (int i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace siv
