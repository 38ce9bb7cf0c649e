#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "wltab/errors.hpp"

namespace wltab {

/// Worker count: `requested` if nonzero, else $WLTAB_THREADS, else the number of cores.
inline std::size_t resolve_threads(std::size_t requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WLTAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Wall-clock budget. A default-constructed deadline never expires.
class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  Deadline() = default;

  /// Non-positive budgets mean no limit.
  static Deadline after(double seconds) {
    Deadline d;
    if (seconds > 0) {
      d.enabled_ = true;
      d.seconds_ = seconds;
      d.end_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    }
    return d;
  }

  bool enabled() const noexcept { return enabled_; }
  double seconds() const noexcept { return seconds_; }
  bool expired() const { return enabled_ && Clock::now() >= end_; }

  void check(const std::string& what) const {
    if (expired()) throw TimeoutError(what + " exceeded the " + std::to_string(seconds_) + " s budget");
  }

 private:
  bool enabled_ = false;
  double seconds_ = 0;
  Clock::time_point end_{};
};

/// Calls fn(i) for i in [0, n) on up to `threads` workers. The first exception
/// stops the remaining work and is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (n == 0) return;
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = std::max<std::size_t>(1, n / (threads * 8));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) break;
      const std::size_t end = std::min(n, begin + chunk);
      try {
        for (std::size_t i = begin; i < end && !stop.load(std::memory_order_relaxed); ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace wltab
