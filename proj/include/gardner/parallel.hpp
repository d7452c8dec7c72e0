#pragma once

#include <algorithm>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "gardner/check.hpp"

namespace gardner {

// Minimal fork-join pool. Work is split into contiguous index chunks; callers
// that need bit-reproducible results combine per-chunk outputs in chunk order.
// A pool with 1 worker runs everything inline on the calling thread.
class ThreadPool {
 public:
  explicit ThreadPool(int workers) : workers_(workers < 1 ? 1 : workers) {
    for (int i = 1; i < workers_; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int workers() const { return workers_; }

  // Runs fn(begin, end, chunk_index) over [0, n) split into at most
  // `workers` contiguous chunks. Blocks until every chunk is done.
  void for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn) {
    if (n == 0) return;
    const int chunks = static_cast<int>(std::min<std::size_t>(workers_, n));
    if (chunks == 1) {
      fn(0, n, 0);
      return;
    }
    const std::size_t base = n / chunks;
    const std::size_t rem = n % chunks;
    std::vector<std::function<void()>> tasks;
    tasks.reserve(chunks);
    std::size_t at = 0;
    for (int c = 0; c < chunks; ++c) {
      const std::size_t len = base + (static_cast<std::size_t>(c) < rem ? 1 : 0);
      const std::size_t begin = at, end = at + len;
      at = end;
      tasks.push_back([&fn, begin, end, c] { fn(begin, end, c); });
    }
    run_all(tasks);
  }

  // Runs the given closures, at most `workers` at a time, and waits.
  void run_all(const std::vector<std::function<void()>>& tasks) {
    if (tasks.empty()) return;
    if (workers_ == 1 || tasks.size() == 1) {
      for (const auto& t : tasks) t();
      return;
    }
    std::exception_ptr first_error;
    std::size_t remaining = tasks.size();
    {
      std::unique_lock<std::mutex> lock(mutex_);
      for (const auto& t : tasks) {
        queue_.push_back([&, task = &t] {
          try {
            (*task)();
          } catch (...) {
            std::unique_lock<std::mutex> guard(mutex_);
            if (!first_error) first_error = std::current_exception();
          }
          std::unique_lock<std::mutex> guard(mutex_);
          if (--remaining == 0) done_cv_.notify_all();
        });
      }
    }
    cv_.notify_all();
    // The calling thread participates so `workers` counts it.
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        if (queue_.empty()) break;
        task = std::move(queue_.front());
        queue_.erase(queue_.begin());
      }
      task();
    }
    std::unique_lock<std::mutex> lock(mutex_);
    done_cv_.wait(lock, [&] { return remaining == 0; });
    if (first_error) std::rethrow_exception(first_error);
  }

 private:
  void worker_loop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
        if (stop_ && queue_.empty()) return;
        if (queue_.empty()) continue;
        task = std::move(queue_.front());
        queue_.erase(queue_.begin());
      }
      task();
    }
  }

  int workers_;
  std::vector<std::thread> threads_;
  std::vector<std::function<void()>> queue_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  bool stop_ = false;
};

}  // namespace gardner
