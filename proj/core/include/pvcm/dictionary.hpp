#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "pvcm/grid.hpp"

namespace pvcm {

/// Signal model b(theta, gamma) used to fill the dictionary.
///
///   t2_exp                  theta = (TE)       gamma = (T2)       exp(-TE/T2)
///   inversion_recovery_mse  theta = (TI, TE)   gamma = (T1, T2)   (1 - 2 exp(-TI/T1)) exp(-TE/T2)
///   diffusion_t2            theta = (b, TE)    gamma = (D, T2)    exp(-b D) exp(-TE/T2)
///   explicit_matrix         entries supplied directly; theta and gamma are indices
///
/// Times are in seconds, b in s/mm^2, D in mm^2/s.
enum class Kernel { t2_exp, inversion_recovery_mse, diffusion_t2, explicit_matrix };

std::string_view to_string(Kernel kernel);
Kernel kernel_from_string(std::string_view name);
/// Number of parameters per acquisition tuple and per grid tuple.
std::size_t kernel_arity(Kernel kernel);

struct AcquisitionSchedule {
  Kernel kernel = Kernel::t2_exp;
  /// P x arity; row p holds theta_p.
  Eigen::MatrixXd entries;

  Eigen::Index size() const { return entries.rows(); }
};

/// Signal value for a single (theta, gamma) pair. Throws InvalidArgument for
/// explicit_matrix or non-positive relaxation constants.
double kernel_value(Kernel kernel, const Eigen::Ref<const Eigen::VectorXd>& theta,
                    const Eigen::Ref<const Eigen::VectorXd>& gamma);

/// The P x Q forward model K with K(p, q) = w_q b(theta_p, gamma_q).
class Dictionary {
 public:
  /// Validates shapes and finiteness; does not recompute entries.
  Dictionary(Eigen::MatrixXd entries, SpectralGrid grid, AcquisitionSchedule schedule);

  /// Wraps an arbitrary matrix (kernel explicit_matrix, index grid/schedule).
  static Dictionary from_matrix(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& entries() const { return entries_; }
  const SpectralGrid& grid() const { return grid_; }
  const AcquisitionSchedule& schedule() const { return schedule_; }
  Eigen::Index measurements() const { return entries_.rows(); }
  Eigen::Index spectral_size() const { return entries_.cols(); }

 private:
  Eigen::MatrixXd entries_;
  SpectralGrid grid_;
  AcquisitionSchedule schedule_;
};

Dictionary build_dictionary(const AcquisitionSchedule& schedule, const SpectralGrid& grid);

/// Rank-r truncated SVD K_r = sum_i sigma_i u_i v_i^T.
class LowRankDictionary {
 public:
  /// Checks orthonormality (1e-10), ordering and positivity of the factors.
  LowRankDictionary(Eigen::VectorXd singular_values, Eigen::MatrixXd left_vectors,
                    Eigen::MatrixXd right_vectors, double frobenius_error);

  Eigen::Index rank() const { return singular_values_.size(); }
  Eigen::Index measurements() const { return left_.rows(); }
  Eigen::Index spectral_size() const { return right_.rows(); }
  const Eigen::VectorXd& singular_values() const { return singular_values_; }
  /// P x r, columns u_i.
  const Eigen::MatrixXd& left_vectors() const { return left_; }
  /// Q x r, columns v_i.
  const Eigen::MatrixXd& right_vectors() const { return right_; }
  /// ||K - K_r||_F / ||K||_F.
  double frobenius_error() const { return frobenius_error_; }

  Eigen::MatrixXd reconstruct() const;
  /// K_r^T m for every column of m (P x N -> Q x N).
  Eigen::MatrixXd apply_adjoint(const Eigen::MatrixXd& m) const;

 private:
  Eigen::VectorXd singular_values_;
  Eigen::MatrixXd left_;
  Eigen::MatrixXd right_;
  double frobenius_error_;
};

inline constexpr double kDefaultRankTolerance = 5e-5;

/// Smallest r with ||K - K_r||_F / ||K||_F < tolerance. The SVD is computed
/// here once; callers cache the result.
LowRankDictionary truncate_dictionary(const Dictionary& dict,
                                      double tolerance = kDefaultRankTolerance);

/// (K_r^T K_r + beta I)^-1 x evaluated in O(rQ) from the truncated factors.
Eigen::VectorXd apply_regularized_inverse(const LowRankDictionary& lrd, double beta,
                                          const Eigen::Ref<const Eigen::VectorXd>& x);

/// Column-batched form of the regularized inverse, either from the truncated
/// SVD (O(rQ) per column) or from the dense Q x Q matrix (K^T K + beta I)^-1
/// built from the unapproximated dictionary (O(Q^2) per column).
///
/// apply() processes columns in fixed groups of kColumnBlock starting at the
/// first column, so results for a column depend only on its group and never
/// on how a caller splits the work.
class RegularizedInverse {
 public:
  static constexpr Eigen::Index kColumnBlock = 32;

  static RegularizedInverse low_rank(const LowRankDictionary& lrd, double beta);
  static RegularizedInverse dense(const Dictionary& dict, double beta);

  void apply(const Eigen::Ref<const Eigen::MatrixXd>& in, Eigen::Ref<Eigen::MatrixXd> out) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& in) const;

  double beta() const { return beta_; }
  bool is_low_rank() const { return low_rank_; }
  Eigen::Index spectral_size() const { return size_; }

 private:
  RegularizedInverse() = default;
  void apply_group(const Eigen::Ref<const Eigen::MatrixXd>& in,
                   Eigen::Ref<Eigen::MatrixXd> out) const;

  double beta_ = 0.0;
  bool low_rank_ = true;
  Eigen::Index size_ = 0;
  Eigen::MatrixXd basis_;          // Q x r (low rank)
  Eigen::VectorXd coefficients_;   // sigma_i^2 / (beta^2 + beta sigma_i^2)
  Eigen::MatrixXd dense_;          // Q x Q (dense)
};

/// Writes `<stem>.sspm` (the matrix) and `<stem>.json` (kernel, schedule and
/// grid axes) into `dir`. Returns the sidecar path.
std::filesystem::path save_dictionary(const Dictionary& dict, const std::filesystem::path& dir,
                                      const std::string& stem = "dictionary");
/// Reads a sidecar written by save_dictionary; the matrix path inside it is
/// resolved relative to the sidecar.
Dictionary load_dictionary(const std::filesystem::path& sidecar);

}  // namespace pvcm
