#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace collusim {

inline unsigned resolve_threads(int threads) {
  if (threads > 0) return static_cast<unsigned>(threads);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Work items must
// not touch shared mutable state except through their own index.
template <class Fn>
void parallel_for(std::uint64_t count, int threads, Fn&& fn) {
  unsigned n = resolve_threads(threads);
  if (count < n) n = static_cast<unsigned>(count);
  if (n <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::uint64_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace collusim
