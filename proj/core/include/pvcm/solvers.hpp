#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pvcm/dictionary.hpp"
#include "pvcm/image.hpp"
#include "pvcm/spatial.hpp"

namespace pvcm {

/// Everything that defines the spatially regularized estimate
///   argmin_{f >= 0} 0.5 ||m - (I (x) K) f||^2 + (lambda/2) ||D f||^2.
/// Members are non-owning; the referenced objects must outlive the problem.
struct Problem {
  const MeasuredStack& data;
  const Dictionary& dict;
  const LowRankDictionary& lrd;
  const SpatialGraph& graph;
  double lambda;

  /// Throws InvalidArgument when shapes disagree or lambda <= 0.
  void validate() const;
};

struct TraceRecord {
  int iteration = 0;
  double wall_seconds = 0.0;
  double cost = 0.0;
  double split_residual = 0.0;
  double dual_residual = 0.0;
};

enum class Termination { max_iters, rel_change, split_residual };
std::string_view to_string(Termination t);

/// State handed to SolverConfig::observer at every trace sample.
struct IterationSnapshot {
  int iteration;
  double wall_seconds;
  const Eigen::MatrixXd& estimate;  ///< feasible iterate (z for LADMM, y for ADMM)
  const Eigen::MatrixXd* dual;      ///< LADMM dual d; null for ADMM
};

struct SolverConfig {
  /// Penalty parameter; unset means sigma_1^2 / 10 of the dictionary.
  std::optional<double> beta;
  /// LADMM proximal weight; unset means 0.75 lambda ||D^T D|| + 1e-10.
  std::optional<double> xi_p;
  int max_iters = 20000;
  double rel_change_tol = 1e-7;
  double split_residual_tol = 1e-6;
  /// Trace sample period in iterations; 0 disables tracing.
  int trace_every = 1;
  int threads = 1;
  /// Use (K^T K + beta I)^-1 from the full dictionary instead of the
  /// truncated SVD.
  bool exact_k = false;
  /// Conjugate-gradient settings for the ADMM z-step.
  double cg_tol = 1e-10;
  int cg_max_iters = 10000;
  /// Called at trace samples; its run time is excluded from wall_seconds.
  std::function<void(const IterationSnapshot&)> observer;
};

struct SolveResult {
  SpectroscopicImage f;
  int iterations = 0;
  std::vector<TraceRecord> trace;
  /// Q x N arrays that make up the algorithm's iterate state.
  int state_vector_count = 0;
  /// Additional Q x N scratch arrays (CG work vectors for ADMM).
  int workspace_vector_count = 0;
  Termination termination = Termination::max_iters;
  double beta = 0.0;
  double xi_p = 0.0;
  double split_residual = 0.0;
  double rel_change = 0.0;
};

/// sigma_1^2 / 10.
double default_beta(const LowRankDictionary& lrd);

/// Unconstrained per-voxel minimizer of the f-subproblem:
/// (K_r^T K_r + beta I)^-1 (g + beta z - d).
Eigen::VectorXd f_update(const LowRankDictionary& lrd, const Eigen::Ref<const Eigen::VectorXd>& g,
                         const Eigen::Ref<const Eigen::VectorXd>& z,
                         const Eigen::Ref<const Eigen::VectorXd>& d, double beta);

/// Linearized, projected z-step:
/// max(0, (xi z - lambda D^T D z + beta f + d) / (xi + beta)).
Eigen::MatrixXd z_update(const SpatialGraph& graph, const Eigen::MatrixXd& z_prev,
                         const Eigen::MatrixXd& f_new, const Eigen::MatrixXd& d, double beta,
                         double xi_p, double lambda);

/// Linearized ADMM with a single split f = z. Holds four Q x N arrays.
SolveResult solve_ladmm(const Problem& problem, const SolverConfig& config);

/// Three-split ADMM baseline (x: data, y: nonnegativity, z: smoothness) with
/// the z-step solved by warm-started conjugate gradients.
SolveResult solve_admm(const Problem& problem, const SolverConfig& config);

/// Lawson-Hanson active-set NNLS: argmin_{x >= 0} ||A x - b||.
struct NnlsResult {
  Eigen::VectorXd x;
  int iterations = 0;
};
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

struct KktReport {
  /// max |g_i| over x_i > 0, divided by max(1, ||A^T b||_inf)
  double stationarity = 0.0;
  /// max(0, -g_i) over x_i == 0
  double dual_infeasibility = 0.0;
  /// min x_i (negative means infeasible)
  double min_value = 0.0;
};
/// Optimality report for min 0.5||A x - b||^2 + 0.5 t ||x||^2, x >= 0, with
/// gradient g = A^T (A x - b) + t x.
KktReport nnls_kkt(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                   double tikhonov = 0.0);

/// Independent voxel-by-voxel NNLS, optionally with (t/2)||f_n||^2 added.
SpectroscopicImage solve_nnls_voxelwise(const Dictionary& dict, const MeasuredStack& data,
                                        double tikhonov = 0.0, int threads = 1);

/// Picks the candidate beta giving the lowest cost after probe_iters LADMM
/// iterations on a small lattice patch; ties go to the smallest beta.
double tune_beta(const Problem& problem, const LatticeCoord& patch_origin,
                 const std::vector<std::size_t>& patch_shape, std::vector<double> candidates,
                 int probe_iters);

/// Columns iteration,wall_seconds,cost,split_residual,dual_residual.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRecord>& trace);

}  // namespace pvcm
