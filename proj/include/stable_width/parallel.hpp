#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace stable_width {

/// Number of worker threads used by the Monte Carlo kernels. Results never
/// depend on it: each work item writes only its own output slot.
struct Parallelism {
  unsigned threads = 1;

  /// Reads STABLE_WIDTH_THREADS; falls back to 1.
  static Parallelism from_env() {
    Parallelism p;
    if (const char* v = std::getenv("STABLE_WIDTH_THREADS")) {
      try {
        const long n = std::stol(v);
        if (n > 0) p.threads = static_cast<unsigned>(n);
      } catch (...) {
      }
    }
    return p;
  }
};

/// Runs fn(begin, end) over contiguous chunks of [0, count).
template <class Fn>
void parallel_chunks(std::size_t count, Parallelism par, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, par.threads), count);
  if (workers <= 1) {
    if (count > 0) fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e] {
      try {
        fn(b, e);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

template <class Fn>
void parallel_for(std::size_t count, Parallelism par, Fn&& fn) {
  parallel_chunks(count, par, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace stable_width
