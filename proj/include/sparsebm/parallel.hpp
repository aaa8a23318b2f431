#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sparsebm {

/// Runs fn(task) for task in [0, n_tasks) on up to `threads` workers. Tasks
/// are independent; callers keep per-task results and reduce them in task
/// order so output does not depend on the worker count.
template <typename Fn>
void parallel_tasks(int n_tasks, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n_tasks));
  if (threads == 1) {
    for (int t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (int t = next++; t < n_tasks; t = next++) {
        try {
          fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace sparsebm
