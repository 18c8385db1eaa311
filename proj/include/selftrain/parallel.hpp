#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace selftrain {

/// Runs f(i) exactly once for every i in [0, n), using at most `threads`
/// worker threads. Callers assign results by index, so the outcome does not
/// depend on the thread count.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, threads), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        f(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace selftrain
