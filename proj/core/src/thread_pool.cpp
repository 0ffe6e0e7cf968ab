#include "melmix/thread_pool.hpp"

#include <atomic>
#include <exception>
#include <memory>

namespace melmix {

struct ThreadPool::Task {
  std::size_t count = 0;
  const std::function<void(std::size_t)>* fn = nullptr;
  std::atomic<std::size_t> next{0};
  std::size_t completed = 0;  // guarded by done_mu
  std::mutex done_mu;
  std::condition_variable done_cv;
  std::exception_ptr error;

  // Claims and runs items until none remain; each item runs exactly once.
  // Returns the number of items this thread completed.
  void run_items() {
    std::size_t done_here = 0;
    std::exception_ptr first_error;
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) break;
      try {
        (*fn)(i);
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
      ++done_here;
    }
    if (done_here > 0 || first_error) {
      std::lock_guard<std::mutex> lock(done_mu);
      completed += done_here;
      if (first_error && !error) error = first_error;
      if (completed == count) done_cv.notify_all();
    }
  }
};

ThreadPool::ThreadPool(std::size_t threads) {
  const std::size_t extra = threads > 1 ? threads - 1 : 0;
  workers_.reserve(extra);
  for (std::size_t i = 0; i < extra; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::worker_loop() {
  for (;;) {
    std::shared_ptr<Task> task;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [this] {
        return stop_ || (current_ && current_->next.load(std::memory_order_relaxed) <
                                         current_->count);
      });
      if (stop_) return;
      task = current_;
    }
    task->run_items();
    {
      std::lock_guard<std::mutex> lock(mu_);
      // All items are claimed once run_items returns.
      if (current_ == task) current_ = nullptr;
    }
  }
}

void ThreadPool::parallel_for(std::size_t count,
                              const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  if (workers_.empty() || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  auto task = std::make_shared<Task>();
  task->count = count;
  task->fn = &fn;
  {
    std::lock_guard<std::mutex> lock(mu_);
    current_ = task;
  }
  cv_.notify_all();
  task->run_items();
  {
    std::unique_lock<std::mutex> lock(task->done_mu);
    task->done_cv.wait(lock, [&] { return task->completed == count; });
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (current_ == task) current_ = nullptr;
  }
  if (task->error) std::rethrow_exception(task->error);
}

}  // namespace melmix
