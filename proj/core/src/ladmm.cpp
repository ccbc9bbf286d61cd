#include <utility>

#include "pvcm/error.hpp"
#include "pvcm/metrics.hpp"
#include "pvcm/parallel.hpp"
#include "pvcm/solvers.hpp"
#include "solver_detail.hpp"

namespace pvcm {

namespace {

enum Sum { kDz, kZ, kSplit, kF, kCount };

}  // namespace

SolveResult solve_ladmm(const Problem& problem, const SolverConfig& config) {
  problem.validate();
  detail::validate_config(config);

  const double beta = config.beta.value_or(default_beta(problem.lrd));
  const double lambda = problem.lambda;
  const double xi_min = compute_xi_p(lambda, operator_norm_dtd(problem.graph));
  const double xi = config.xi_p.value_or(xi_min);
  if (xi < xi_min) {
    throw InvalidArgument("xi_p is below 0.75 lambda ||D^T D|| + 1e-10");
  }

  const Eigen::Index q = problem.dict.spectral_size();
  const Eigen::Index n = problem.graph.voxels();
  const Eigen::Index blocks = block_count(n);
  const RegularizedInverse inverse = config.exact_k
                                         ? RegularizedInverse::dense(problem.dict, beta)
                                         : RegularizedInverse::low_rank(problem.lrd, beta);
  WorkerPool pool(config.threads);
  detail::Stopwatch clock;

  // The four Q x N arrays. F holds f^{k+1} until the z-step overwrites it
  // with z^{k+1}; Z and F are then swapped.
  const Eigen::MatrixXd g = config.exact_k ? Eigen::MatrixXd(problem.dict.entries().transpose() *
                                                             problem.data.values())
                                           : problem.lrd.apply_adjoint(problem.data.values());
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(q, n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(q, n);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(q, n);

  const double inv_step = 1.0 / (xi + beta);
  const double floor = detail::split_floor(g, problem.lrd);
  detail::BlockSums sums(blocks, kCount);

  auto f_step = [&](Eigen::Index b) {
    const auto r = block_range(b, n);
    const Eigen::MatrixXd c = g.middleCols(r.begin, r.size) + beta * z.middleCols(r.begin, r.size) -
                              d.middleCols(r.begin, r.size);
    inverse.apply(c, f.middleCols(r.begin, r.size));
  };

  auto z_step = [&](Eigen::Index b) {
    const auto r = block_range(b, n);
    Eigen::VectorXd lz(q);
    double dz = 0.0, zz = 0.0, split = 0.0, ff = 0.0;
    for (Eigen::Index v = r.begin; v < r.begin + r.size; ++v) {
      dtd_column(problem.graph, z, v, lz);
      auto fv = f.col(v);
      auto dv = d.col(v);
      auto zv = z.col(v);
      for (Eigen::Index i = 0; i < q; ++i) {
        const double zn =
            std::max(0.0, (xi * zv(i) - lambda * lz(i) + beta * fv(i) + dv(i)) * inv_step);
        const double diff = zn - fv(i);
        const double step = zn - zv(i);
        dv(i) -= beta * diff;
        dz += step * step;
        zz += zv(i) * zv(i);
        split += diff * diff;
        ff += fv(i) * fv(i);
        fv(i) = zn;
      }
    }
    sums.at(b, kDz) = dz;
    sums.at(b, kZ) = zz;
    sums.at(b, kSplit) = split;
    sums.at(b, kF) = ff;
  };

  SolveResult result;
  result.beta = beta;
  result.xi_p = xi;
  result.state_vector_count = 4;
  result.workspace_vector_count = 0;

  int k = 0;
  double rel_change = 0.0;
  double split = 0.0;
  double dual = 0.0;
  while (k < config.max_iters) {
    ++k;
    pool.run(blocks, f_step);
    pool.run(blocks, z_step);
    std::swap(z, f);

    const double step_norm = std::sqrt(sums.total(kDz));
    rel_change = detail::ratio(step_norm, std::sqrt(sums.total(kZ)));
    split = std::sqrt(sums.total(kSplit)) / std::max(std::sqrt(sums.total(kF)), floor);
    dual = beta * step_norm;
    const auto stop = detail::check_stop(rel_change, split, config);

    if (detail::trace_due(config, k) || (stop.stop && config.trace_every > 0)) {
      clock.pause();
      const double wall = clock.seconds();
      result.trace.push_back({k, wall, cost(problem, z).total, split, dual});
      if (config.observer) config.observer(IterationSnapshot{k, wall, z, &d});
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
  result.f.values = std::move(z);
  return result;
}

}  // namespace pvcm
