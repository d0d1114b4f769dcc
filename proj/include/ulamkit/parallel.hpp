#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ulamkit {

/// Worker count: hardware concurrency capped at 8, overridable (and
/// cappable) via the ULAMKIT_THREADS environment variable.
[[nodiscard]] inline unsigned thread_budget() {
  unsigned n = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("ULAMKIT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && v <= 256) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    if (v >= 1) n = static_cast<unsigned>(std::min<long>(v, 256));
  }
  return n;
}

/// Runs fn(i) for i in [0, n). Work items must be independent; callers get
/// determinism by writing results into index i of a preallocated buffer.
/// If several items throw, the exception of the smallest index is rethrown.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_budget(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_index = n;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ulamkit
