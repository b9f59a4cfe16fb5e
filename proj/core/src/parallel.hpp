#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fdptomo::detail {

/// Runs task(i) for i in [0, n) on up to hardware_concurrency threads.
/// Tasks must write only to slots owned by their index; the first exception
/// thrown by any task is rethrown on the caller's thread.
template <class Task>
void parallel_for(std::size_t n, Task&& task, unsigned max_threads = 0) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (max_threads > 0) hw = std::min(hw, max_threads);
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(hw, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fdptomo::detail
