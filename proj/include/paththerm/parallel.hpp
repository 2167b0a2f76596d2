#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace paththerm {

/// Number of worker threads used by ensemble loops; 0 means hardware concurrency.
inline std::atomic<std::size_t>& worker_limit() {
  static std::atomic<std::size_t> limit{0};
  return limit;
}

/// Runs task(i) for i in [0, n_tasks). Tasks must write only their own
/// output slot; callers reduce in index order afterwards, so results do not
/// depend on how many workers ran.
template <class Task>
void parallel_for(std::size_t n_tasks, Task&& task) {
  std::size_t workers = worker_limit().load();
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = std::min(workers, n_tasks);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n_tasks;) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace paththerm
