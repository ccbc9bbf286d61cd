#pragma once

#include <condition_variable>
#include <exception>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace pvcm {

/// Voxels per work item. Work is always split into the same fixed blocks,
/// whatever the thread count, and per-block partial sums are reduced in block
/// order, so results are bit-identical for any number of threads.
inline constexpr Eigen::Index kVoxelBlock = 32;

inline Eigen::Index block_count(Eigen::Index n) { return (n + kVoxelBlock - 1) / kVoxelBlock; }

struct BlockRange {
  Eigen::Index begin;
  Eigen::Index size;
};

inline BlockRange block_range(Eigen::Index block, Eigen::Index n) {
  const Eigen::Index begin = block * kVoxelBlock;
  return {begin, std::min(kVoxelBlock, n - begin)};
}

/// Persistent pool of worker threads. The calling thread takes part in every
/// run, so a pool of size 1 spawns nothing and runs inline.
class WorkerPool {
 public:
  explicit WorkerPool(int threads = 1);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int threads() const { return static_cast<int>(workers_.size()) + 1; }

  /// Calls fn(i) once for each i in [0, count) and returns when all are done.
  /// Items must write disjoint memory. Exceptions from fn are rethrown here.
  void run(Eigen::Index count, const std::function<void(Eigen::Index)>& fn);

 private:
  void worker_loop();
  void drain();

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(Eigen::Index)>* task_ = nullptr;
  Eigen::Index count_ = 0;
  Eigen::Index next_ = 0;
  Eigen::Index finished_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

/// Sums per-block partials in block order.
double ordered_sum(const std::vector<double>& partials);

}  // namespace pvcm
