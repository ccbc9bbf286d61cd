#include <cmath>
#include <fstream>
#include <iomanip>

#include "pvcm/error.hpp"
#include "pvcm/solvers.hpp"
#include "solver_detail.hpp"

namespace pvcm {

void Problem::validate() const {
  if (data.measurements() != dict.measurements() || lrd.measurements() != dict.measurements()) {
    throw InvalidArgument("data, dictionary and low-rank factors disagree on P");
  }
  if (lrd.spectral_size() != dict.spectral_size()) {
    throw InvalidArgument("dictionary and low-rank factors disagree on Q");
  }
  if (data.voxels() != graph.voxels()) {
    throw InvalidArgument("data and spatial graph disagree on N");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("lambda must be positive and finite");
  }
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::max_iters: return "max_iters";
    case Termination::rel_change: return "rel_change";
    case Termination::split_residual: return "split_residual";
  }
  return "unknown";
}

double default_beta(const LowRankDictionary& lrd) {
  if (lrd.rank() == 0) throw InvalidArgument("default beta needs a nonzero dictionary");
  const double s1 = lrd.singular_values()(0);
  return s1 * s1 / 10.0;
}

Eigen::VectorXd f_update(const LowRankDictionary& lrd, const Eigen::Ref<const Eigen::VectorXd>& g,
                         const Eigen::Ref<const Eigen::VectorXd>& z,
                         const Eigen::Ref<const Eigen::VectorXd>& d, double beta) {
  const Eigen::Index q = lrd.spectral_size();
  if (g.size() != q || z.size() != q || d.size() != q) {
    throw InvalidArgument("f_update: vectors must have length Q");
  }
  return apply_regularized_inverse(lrd, beta, g + beta * z - d);
}

Eigen::MatrixXd z_update(const SpatialGraph& graph, const Eigen::MatrixXd& z_prev,
                         const Eigen::MatrixXd& f_new, const Eigen::MatrixXd& d, double beta,
                         double xi_p, double lambda) {
  if (z_prev.cols() != graph.voxels() || f_new.rows() != z_prev.rows() ||
      f_new.cols() != z_prev.cols() || d.rows() != z_prev.rows() || d.cols() != z_prev.cols()) {
    throw InvalidArgument("z_update: shape mismatch");
  }
  if (!(xi_p > 0.0) || !(beta > 0.0)) throw InvalidArgument("z_update: xi_p and beta must be positive");
  Eigen::MatrixXd lz = apply_dtd(graph, z_prev);
  return ((xi_p * z_prev - lambda * lz + beta * f_new + d) / (xi_p + beta)).cwiseMax(0.0);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,wall_seconds,cost,split_residual,dual_residual\n";
  out << std::setprecision(17);
  for (const auto& r : trace) {
    out << r.iteration << ',' << r.wall_seconds << ',' << r.cost << ',' << r.split_residual << ','
        << r.dual_residual << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace detail {

void validate_config(const SolverConfig& config) {
  if (config.beta && !(*config.beta > 0.0 && std::isfinite(*config.beta))) {
    throw InvalidArgument("beta must be positive and finite");
  }
  if (config.xi_p && !(*config.xi_p > 0.0 && std::isfinite(*config.xi_p))) {
    throw InvalidArgument("xi_p must be positive and finite");
  }
  if (config.max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (!(config.rel_change_tol > 0.0) || !(config.split_residual_tol > 0.0)) {
    throw InvalidArgument("stopping tolerances must be positive");
  }
  if (config.trace_every < 0) throw InvalidArgument("trace_every must be nonnegative");
  if (config.threads < 1) throw InvalidArgument("threads must be at least 1");
  if (!(config.cg_tol > 0.0) || config.cg_max_iters < 1) {
    throw InvalidArgument("invalid conjugate-gradient settings");
  }
}

}  // namespace detail
}  // namespace pvcm
