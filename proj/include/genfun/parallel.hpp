#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace genfun {

//! Worker count from an explicit request, else GENFUN_THREADS, else 1.
int resolve_threads(int requested);

//! Runs body(i) for i in [0, n) on up to `threads` workers. Bodies write to
//! per-index slots, so results do not depend on scheduling; the first
//! exception (lowest index) is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body)
{
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::mutex mutex;
  std::size_t failed_at = n;
  std::exception_ptr error;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n)
        return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (i < failed_at) {
          failed_at = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w)
    pool.emplace_back(run);
  run();
  for (auto& t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace genfun
