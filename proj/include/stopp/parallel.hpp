#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stopp {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> n{0};
  return n;
}

// Set on worker threads so nested loops run serially instead of spawning.
inline thread_local bool in_parallel_region = false;
}  // namespace detail

/// Worker count used by parallel loops. 0 means "use STOPP_THREADS if set,
/// else hardware concurrency".
inline void set_num_threads(unsigned n) { detail::thread_setting() = n; }

inline unsigned num_threads() {
  unsigned n = detail::thread_setting();
  if (n > 0) return n;
  if (const char* env = std::getenv("STOPP_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs f(i) for i in [0, n). Each index is handled by exactly one worker, so
/// callers writing only to slot i get results independent of the worker count.
/// The first exception thrown by any f(i) is rethrown on the calling thread.
/// Nested calls from inside a worker run serially.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = detail::in_parallel_region ? 1 : std::min<std::size_t>(num_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    const bool outer = detail::in_parallel_region;
    detail::in_parallel_region = true;
    struct Restore {
      bool v;
      ~Restore() { detail::in_parallel_region = v; }
    } restore{outer};
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace stopp
