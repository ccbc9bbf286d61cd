#include <string>
#include <utility>

#include "pvcm/error.hpp"
#include "pvcm/metrics.hpp"
#include "pvcm/parallel.hpp"
#include "pvcm/solvers.hpp"
#include "solver_detail.hpp"

namespace pvcm {

namespace {

enum Sum { kDy, kY, kSplit, kF, kDf, kCount };

// Conjugate gradients for (lambda D^T D + beta I) z = rhs on the whole Q x N
// array, starting from the current z.
class SmoothnessSolver {
 public:
  SmoothnessSolver(const SpatialGraph& graph, double lambda, double beta, Eigen::Index q,
                   WorkerPool& pool)
      : graph_(graph), lambda_(lambda), beta_(beta), pool_(pool), n_(graph.voxels()),
        blocks_(block_count(n_)), r_(q, n_), p_(q, n_), ap_(q, n_), partial_(blocks_, 2) {}

  int solve(const Eigen::MatrixXd& rhs, Eigen::MatrixXd& z, double tol, int max_iters) {
    const double rhs_norm = std::sqrt(dot(rhs, rhs));
    if (rhs_norm == 0.0) {
      z.setZero();
      return 0;
    }
    apply(z, ap_);
    blockwise([&](Eigen::Index, Eigen::Index c, Eigen::Index w) {
      r_.middleCols(c, w) = rhs.middleCols(c, w) - ap_.middleCols(c, w);
      p_.middleCols(c, w) = r_.middleCols(c, w);
    });
    double rr = dot(r_, r_);
    for (int it = 0; it < max_iters; ++it) {
      if (std::sqrt(rr) <= tol * rhs_norm) return it;
      apply(p_, ap_);
      const double alpha = rr / dot(p_, ap_);
      blockwise([&](Eigen::Index b, Eigen::Index c, Eigen::Index w) {
        z.middleCols(c, w) += alpha * p_.middleCols(c, w);
        r_.middleCols(c, w) -= alpha * ap_.middleCols(c, w);
        partial_.at(b, 0) = r_.middleCols(c, w).squaredNorm();
      });
      const double rr_next = partial_.total(0);
      const double gamma = rr_next / rr;
      rr = rr_next;
      blockwise([&](Eigen::Index, Eigen::Index c, Eigen::Index w) {
        p_.middleCols(c, w) = r_.middleCols(c, w) + gamma * p_.middleCols(c, w);
      });
    }
    if (std::sqrt(rr) <= tol * rhs_norm) return max_iters;
    throw ConvergenceError("conjugate gradients did not reach relative residual " +
                           std::to_string(tol) + " in " + std::to_string(max_iters) +
                           " iterations");
  }

 private:
  template <class Fn>
  void blockwise(Fn&& fn) {
    pool_.run(blocks_, [&](Eigen::Index b) {
      const auto r = block_range(b, n_);
      fn(b, r.begin, r.size);
    });
  }

  void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) {
    blockwise([&](Eigen::Index, Eigen::Index c, Eigen::Index w) {
      for (Eigen::Index v = c; v < c + w; ++v) {
        auto o = out.col(v);
        dtd_column(graph_, x, v, o);
        o = lambda_ * o + beta_ * x.col(v);
      }
    });
  }

  double dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    blockwise([&](Eigen::Index blk, Eigen::Index c, Eigen::Index w) {
      partial_.at(blk, 1) = (a.middleCols(c, w).array() * b.middleCols(c, w).array()).sum();
    });
    return partial_.total(1);
  }

  const SpatialGraph& graph_;
  double lambda_;
  double beta_;
  WorkerPool& pool_;
  Eigen::Index n_;
  Eigen::Index blocks_;
  Eigen::MatrixXd r_, p_, ap_;
  detail::BlockSums partial_;
};

}  // namespace

SolveResult solve_admm(const Problem& problem, const SolverConfig& config) {
  problem.validate();
  detail::validate_config(config);

  const double beta = config.beta.value_or(default_beta(problem.lrd));
  const double lambda = problem.lambda;
  const Eigen::Index q = problem.dict.spectral_size();
  const Eigen::Index n = problem.graph.voxels();
  const Eigen::Index blocks = block_count(n);
  const RegularizedInverse inverse = config.exact_k
                                         ? RegularizedInverse::dense(problem.dict, beta)
                                         : RegularizedInverse::low_rank(problem.lrd, beta);
  WorkerPool pool(config.threads);
  detail::Stopwatch clock;

  // State: f, x, y, z, d_x, d_y, d_z and g.
  const Eigen::MatrixXd g = config.exact_k ? Eigen::MatrixXd(problem.dict.entries().transpose() *
                                                             problem.data.values())
                                           : problem.lrd.apply_adjoint(problem.data.values());
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(q, n);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(q, n);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(q, n);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(q, n);
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(q, n);
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(q, n);
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(q, n);
  // Workspace: CG right-hand side plus the solver's r, p and A p.
  Eigen::MatrixXd rhs(q, n);
  SmoothnessSolver smoother(problem.graph, lambda, beta, q, pool);

  const double floor = detail::split_floor(g, problem.lrd);
  detail::BlockSums sums(blocks, kCount);

  auto local_step = [&](Eigen::Index b) {
    const auto r = block_range(b, n);
    const Eigen::Index c = r.begin, w = r.size;
    const Eigen::MatrixXd f_old = f.middleCols(c, w);
    f.middleCols(c, w) = (beta * x.middleCols(c, w) + dx.middleCols(c, w) +
                          beta * y.middleCols(c, w) + dy.middleCols(c, w) +
                          beta * z.middleCols(c, w) + dz.middleCols(c, w)) /
                         (3.0 * beta);
    const Eigen::MatrixXd cx = g.middleCols(c, w) + beta * f.middleCols(c, w) - dx.middleCols(c, w);
    inverse.apply(cx, x.middleCols(c, w));
    const Eigen::MatrixXd y_new =
        (f.middleCols(c, w) - dy.middleCols(c, w) / beta).cwiseMax(0.0);
    sums.at(b, kDy) = (y_new - y.middleCols(c, w)).squaredNorm();
    sums.at(b, kY) = y.middleCols(c, w).squaredNorm();
    sums.at(b, kDf) = (f.middleCols(c, w) - f_old).squaredNorm();
    y.middleCols(c, w) = y_new;
    rhs.middleCols(c, w) = beta * f.middleCols(c, w) - dz.middleCols(c, w);
  };

  auto dual_step = [&](Eigen::Index b) {
    const auto r = block_range(b, n);
    const Eigen::Index c = r.begin, w = r.size;
    const auto fb = f.middleCols(c, w);
    sums.at(b, kSplit) = (fb - x.middleCols(c, w)).squaredNorm() +
                         (fb - y.middleCols(c, w)).squaredNorm() +
                         (fb - z.middleCols(c, w)).squaredNorm();
    sums.at(b, kF) = fb.squaredNorm();
    dx.middleCols(c, w) -= beta * (fb - x.middleCols(c, w));
    dy.middleCols(c, w) -= beta * (fb - y.middleCols(c, w));
    dz.middleCols(c, w) -= beta * (fb - z.middleCols(c, w));
  };

  SolveResult result;
  result.beta = beta;
  result.state_vector_count = 8;
  result.workspace_vector_count = 4;

  int k = 0;
  double rel_change = 0.0;
  double split = 0.0;
  double dual = 0.0;
  while (k < config.max_iters) {
    ++k;
    pool.run(blocks, local_step);
    smoother.solve(rhs, z, config.cg_tol, config.cg_max_iters);
    pool.run(blocks, dual_step);

    rel_change = detail::ratio(std::sqrt(sums.total(kDy)), std::sqrt(sums.total(kY)));
    split = std::sqrt(sums.total(kSplit)) / std::max(std::sqrt(sums.total(kF)), floor);
    dual = beta * std::sqrt(sums.total(kDf));
    const auto stop = detail::check_stop(rel_change, split, config);

    if (detail::trace_due(config, k) || (stop.stop && config.trace_every > 0)) {
      clock.pause();
      const double wall = clock.seconds();
      result.trace.push_back({k, wall, cost(problem, y).total, split, dual});
      if (config.observer) config.observer(IterationSnapshot{k, wall, y, nullptr});
      clock.resume();
    }
    if (stop.stop) {
      result.termination = stop.reason;
      break;
    }
  }

  result.iterations = k;
  result.split_residual = split;
  result.rel_change = rel_change;
  result.f.values = std::move(y);
  return result;
}

}  // namespace pvcm
