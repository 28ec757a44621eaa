#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace vpatch::detail {

/// Static block partition of [0, count) across workers. Each index must be
/// independent and write only its own slot, so the result does not depend on
/// the worker count.
inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  const int chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      const int lo = t * chunk;
      const int hi = std::min(count, lo + chunk);
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace vpatch::detail
