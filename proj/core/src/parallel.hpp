#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace lionlab::detail {

// Runs f(i) for i in [0, n). Each task owns its output slot, so results are
// independent of scheduling; callers merge by index afterwards.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      f(i);
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min(threads, n);
  pool.reserve(count);
  for (std::size_t k = 0; k < count; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace lionlab::detail
