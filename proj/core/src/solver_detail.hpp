#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "pvcm/parallel.hpp"
#include "pvcm/solvers.hpp"

namespace pvcm::detail {

inline constexpr double kTiny = std::numeric_limits<double>::min();

// Wall clock that can be paused around bookkeeping.
class Stopwatch {
 public:
  Stopwatch() : start_(clock::now()) {}
  void pause() { paused_at_ = clock::now(); }
  void resume() { excluded_ += clock::now() - paused_at_; }
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_ - excluded_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_;
  clock::time_point paused_at_;
  clock::duration excluded_{0};
};

// Per-block partial sums of a fixed number of quantities, reduced in block order.
class BlockSums {
 public:
  BlockSums(Eigen::Index blocks, int quantities)
      : quantities_(quantities), partials_(static_cast<std::size_t>(blocks * quantities), 0.0) {}

  double& at(Eigen::Index block, int quantity) {
    return partials_[static_cast<std::size_t>(block * quantities_ + quantity)];
  }
  double total(int quantity) const {
    double s = 0.0;
    for (std::size_t i = static_cast<std::size_t>(quantity); i < partials_.size();
         i += static_cast<std::size_t>(quantities_)) {
      s += partials_[i];
    }
    return s;
  }

 private:
  int quantities_;
  std::vector<double> partials_;
};

// Floor for the ||f|| normalizer: a tiny fraction of the unconstrained
// least-squares scale ||K^T m|| / sigma_1^2.
inline double split_floor(const Eigen::MatrixXd& g, const LowRankDictionary& lrd) {
  const double s1 = lrd.rank() > 0 ? lrd.singular_values()(0) : 1.0;
  return std::max(kTiny, 1.5e-8 * g.norm() / (s1 * s1));
}

inline double ratio(double num, double den) {
  if (num == 0.0) return 0.0;
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

struct StopCheck {
  bool stop = false;
  Termination reason = Termination::max_iters;
};

// Both tests must pass; the label names whichever was closer to its threshold.
inline StopCheck check_stop(double rel_change, double split, const SolverConfig& config) {
  StopCheck out;
  if (rel_change < config.rel_change_tol && split < config.split_residual_tol) {
    out.stop = true;
    out.reason = rel_change / config.rel_change_tol >= split / config.split_residual_tol
                     ? Termination::rel_change
                     : Termination::split_residual;
  }
  return out;
}

inline bool trace_due(const SolverConfig& config, int k) {
  return config.trace_every > 0 && k % config.trace_every == 0;
}

void validate_config(const SolverConfig& config);

}  // namespace pvcm::detail
