#include <algorithm>
#include <cmath>
#include <limits>

#include "pvcm/error.hpp"
#include "pvcm/metrics.hpp"
#include "pvcm/solvers.hpp"

namespace pvcm {

double tune_beta(const Problem& problem, const LatticeCoord& patch_origin,
                 const std::vector<std::size_t>& patch_shape, std::vector<double> candidates,
                 int probe_iters) {
  problem.validate();
  if (candidates.empty()) throw InvalidArgument("tune_beta: no candidate values");
  for (double c : candidates) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("tune_beta: candidates must be positive");
  }
  if (probe_iters < 1) throw InvalidArgument("tune_beta: probe_iters must be at least 1");
  const SpatialGraph& graph = problem.graph;
  if (!graph.has_lattice()) throw InvalidArgument("tune_beta: the spatial graph has no lattice");
  const auto& shape = graph.lattice_shape();
  if (patch_shape.size() != shape.size()) {
    throw InvalidArgument("tune_beta: patch rank differs from the image rank");
  }

  LatticeCoord extent{1, 1, 1};
  for (std::size_t a = 0; a < patch_shape.size(); ++a) {
    if (patch_shape[a] == 0) throw InvalidArgument("tune_beta: empty patch");
    extent[a] = patch_shape[a];
  }
  std::vector<Eigen::Index> voxels;
  std::vector<LatticeCoord> coords;
  for (std::size_t z = 0; z < extent[2]; ++z) {
    for (std::size_t y = 0; y < extent[1]; ++y) {
      for (std::size_t x = 0; x < extent[0]; ++x) {
        const LatticeCoord at{patch_origin[0] + x, patch_origin[1] + y, patch_origin[2] + z};
        const auto v = graph.voxel_at(at);
        if (!v) throw InvalidArgument("tune_beta: patch extends outside the mask");
        voxels.push_back(*v);
        coords.push_back({x, y, z});
      }
    }
  }

  // Local index of each global voxel in the patch.
  std::vector<Eigen::Index> local(static_cast<std::size_t>(graph.voxels()), -1);
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    local[static_cast<std::size_t>(voxels[i])] = static_cast<Eigen::Index>(i);
  }
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
  for (const auto& [a, b] : graph.edges()) {
    const Eigen::Index la = local[static_cast<std::size_t>(a)];
    const Eigen::Index lb = local[static_cast<std::size_t>(b)];
    if (la >= 0 && lb >= 0) edges.emplace_back(la, lb);
  }
  const auto count = static_cast<Eigen::Index>(voxels.size());
  const SpatialGraph sub_graph(count, std::move(edges), patch_shape, std::move(coords));
  Eigen::MatrixXd sub_values(problem.data.measurements(), count);
  for (Eigen::Index i = 0; i < count; ++i) {
    sub_values.col(i) = problem.data.values().col(voxels[static_cast<std::size_t>(i)]);
  }
  const MeasuredStack sub_data(std::move(sub_values));
  const Problem sub{sub_data, problem.dict, problem.lrd, sub_graph, problem.lambda};

  std::sort(candidates.begin(), candidates.end());
  SolverConfig config;
  config.max_iters = probe_iters;
  config.trace_every = 0;
  double best_beta = candidates.front();
  double best_cost = std::numeric_limits<double>::infinity();
  for (double beta : candidates) {
    config.beta = beta;
    const SolveResult r = solve_ladmm(sub, config);
    const double c = cost(sub, r.f.values).total;
    if (c < best_cost) {
      best_cost = c;
      best_beta = beta;
    }
  }
  return best_beta;
}

}  // namespace pvcm
