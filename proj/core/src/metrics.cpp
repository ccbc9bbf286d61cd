#include "pvcm/metrics.hpp"

#include <vector>

#include "pvcm/error.hpp"
#include "pvcm/parallel.hpp"
#include "pvcm/solvers.hpp"

namespace pvcm {

CostBreakdown cost(const Dictionary& dict, const MeasuredStack& data, const SpatialGraph& graph,
                   double lambda, const Eigen::MatrixXd& f) {
  const Eigen::Index n = graph.voxels();
  if (f.rows() != dict.spectral_size() || f.cols() != n || data.voxels() != n ||
      data.measurements() != dict.measurements()) {
    throw InvalidArgument("cost: shapes of f, data, dictionary and graph disagree");
  }
  const Eigen::Index blocks = block_count(n);
  std::vector<double> data_part(static_cast<std::size_t>(blocks), 0.0);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const auto r = block_range(b, n);
    const Eigen::MatrixXd residual =
        data.values().middleCols(r.begin, r.size) - dict.entries() * f.middleCols(r.begin, r.size);
    data_part[static_cast<std::size_t>(b)] = residual.squaredNorm();
  }
  double roughness = 0.0;
  for (const auto& [a, b] : graph.edges()) roughness += (f.col(a) - f.col(b)).squaredNorm();

  CostBreakdown out;
  out.data_term = 0.5 * ordered_sum(data_part);
  out.penalty_term = lambda * roughness;
  out.total = out.data_term + out.penalty_term;
  return out;
}

CostBreakdown cost(const Problem& problem, const Eigen::MatrixXd& f) {
  return cost(problem.dict, problem.data, problem.graph, problem.lambda, f);
}

double dfcs(const Eigen::MatrixXd& f_k, const Eigen::MatrixXd& f_star) {
  if (f_k.rows() != f_star.rows() || f_k.cols() != f_star.cols()) {
    throw InvalidArgument("dfcs: shape mismatch");
  }
  const double ref = f_star.norm();
  if (!(ref > 0.0)) throw InvalidArgument("dfcs: reference solution is zero");
  return (f_k - f_star).norm() / ref;
}

}  // namespace pvcm
