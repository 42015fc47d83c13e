#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ifk {

// Process-wide worker count; 0 means hardware concurrency.
inline std::atomic<unsigned>& worker_setting() {
  static std::atomic<unsigned> w{0};
  return w;
}

inline void set_workers(unsigned n) { worker_setting() = n; }

inline unsigned workers() {
  unsigned w = worker_setting();
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  return w;
}

// Runs fn(i) for i in [0, n). Every index writes only its own output slot, so
// results do not depend on the worker count. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t w = std::min<std::size_t>(workers(), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ifk
