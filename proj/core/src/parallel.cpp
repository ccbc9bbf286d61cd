#include "pvcm/parallel.hpp"

#include <algorithm>
#include <utility>

namespace pvcm {

WorkerPool::WorkerPool(int threads) {
  const int extra = std::max(threads, 1) - 1;
  workers_.reserve(static_cast<std::size_t>(extra));
  for (int i = 0; i < extra; ++i) workers_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& t : workers_) t.join();
}

void WorkerPool::drain() {
  for (;;) {
    Eigen::Index item = 0;
    const std::function<void(Eigen::Index)>* task = nullptr;
    {
      std::lock_guard lock(mutex_);
      if (next_ >= count_) return;
      item = next_++;
      task = task_;
    }
    try {
      (*task)(item);
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
    std::lock_guard lock(mutex_);
    if (++finished_ == count_) done_.notify_all();
  }
}

void WorkerPool::worker_loop() {
  std::size_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
    }
    drain();
  }
}

void WorkerPool::run(Eigen::Index count, const std::function<void(Eigen::Index)>& fn) {
  if (count <= 0) return;
  if (workers_.empty()) {
    for (Eigen::Index i = 0; i < count; ++i) fn(i);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    task_ = &fn;
    count_ = count;
    next_ = 0;
    finished_ = 0;
    error_ = nullptr;
    ++generation_;
  }
  wake_.notify_all();
  drain();
  std::unique_lock lock(mutex_);
  done_.wait(lock, [&] { return finished_ == count_; });
  task_ = nullptr;
  if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
}

double ordered_sum(const std::vector<double>& partials) {
  double total = 0.0;
  for (double v : partials) total += v;
  return total;
}

}  // namespace pvcm
