#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace acp {

// Runs fn(i) for i in [0, n) on up to `width` threads; results are stored by
// index so assembly does not depend on completion order.
template <class F>
auto run_trials(std::int64_t n, int width, F fn) -> std::vector<decltype(fn(std::int64_t{0}))> {
  using R = decltype(fn(std::int64_t{0}));
  std::vector<R> out(static_cast<std::size_t>(n));
  if (width <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::int64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  int w = static_cast<int>(std::min<std::int64_t>(width, n));
  for (int k = 0; k < w; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace acp
