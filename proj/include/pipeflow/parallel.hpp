#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace pipeflow {

/// Worker count: PIPEFLOW_UQ_WORKERS wins over the requested value; 0 means
/// one worker per logical core.
inline unsigned resolve_workers(unsigned requested = 0) {
  if (const char* env = std::getenv("PIPEFLOW_UQ_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Applies fn to 0..n-1 on up to `workers` threads. Results come back in
/// index order; the first exception (by index) is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn, unsigned workers) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errs(n);
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < w; ++t) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace pipeflow
