#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ealoc {

// Runs fn(i) for i in [0, n) on a small pool. Jobs write to their own slots,
// so results do not depend on scheduling. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  unsigned k = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  k = std::clamp<unsigned>(k, 1u, static_cast<unsigned>(std::min<std::size_t>(n, 1024)));
  if (k == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < k; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!err) err = std::current_exception();
            next = n;
          }
        }
      });
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace ealoc
