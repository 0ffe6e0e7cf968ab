#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace melmix {

// Persistent worker pool for fork-join loops. Work items write to disjoint
// outputs, so the only synchronization is the join.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t threads);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t thread_count() const { return workers_.size() + 1; }

  // Runs fn(i) for i in [0, count), distributed over the pool plus the
  // calling thread. Blocks until all items finish. Rethrows the first
  // exception raised by any item.
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

 private:
  struct Task;
  void worker_loop();

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::shared_ptr<Task> current_;
  bool stop_ = false;
};

}  // namespace melmix
