#include "pvcm/dictionary.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "pvcm/error.hpp"

namespace pvcm {

std::string_view to_string(Kernel kernel) {
  switch (kernel) {
    case Kernel::t2_exp: return "T2Exp";
    case Kernel::inversion_recovery_mse: return "InversionRecoveryMSE";
    case Kernel::diffusion_t2: return "DiffusionT2";
    case Kernel::explicit_matrix: return "Explicit";
  }
  return "unknown";
}

Kernel kernel_from_string(std::string_view name) {
  for (auto k : {Kernel::t2_exp, Kernel::inversion_recovery_mse, Kernel::diffusion_t2,
                 Kernel::explicit_matrix}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown kernel: " + std::string(name));
}

std::size_t kernel_arity(Kernel kernel) {
  return kernel == Kernel::t2_exp || kernel == Kernel::explicit_matrix ? 1 : 2;
}

double kernel_value(Kernel kernel, const Eigen::Ref<const Eigen::VectorXd>& theta,
                    const Eigen::Ref<const Eigen::VectorXd>& gamma) {
  const auto arity = static_cast<Eigen::Index>(kernel_arity(kernel));
  if (theta.size() != arity || gamma.size() != arity) {
    throw InvalidArgument("kernel " + std::string(to_string(kernel)) +
                          " expects tuples of arity " + std::to_string(arity));
  }
  switch (kernel) {
    case Kernel::t2_exp: {
      if (!(gamma(0) > 0.0)) throw InvalidArgument("T2 must be positive");
      return std::exp(-theta(0) / gamma(0));
    }
    case Kernel::inversion_recovery_mse: {
      if (!(gamma(0) > 0.0) || !(gamma(1) > 0.0)) {
        throw InvalidArgument("T1 and T2 must be positive");
      }
      return (1.0 - 2.0 * std::exp(-theta(0) / gamma(0))) * std::exp(-theta(1) / gamma(1));
    }
    case Kernel::diffusion_t2: {
      if (gamma(0) < 0.0 || !(gamma(1) > 0.0)) {
        throw InvalidArgument("diffusivity must be nonnegative and T2 positive");
      }
      return std::exp(-theta(0) * gamma(0)) * std::exp(-theta(1) / gamma(1));
    }
    case Kernel::explicit_matrix:
      break;
  }
  throw InvalidArgument("explicit dictionaries have no analytic kernel");
}

Dictionary::Dictionary(Eigen::MatrixXd entries, SpectralGrid grid, AcquisitionSchedule schedule)
    : entries_(std::move(entries)), grid_(std::move(grid)), schedule_(std::move(schedule)) {
  if (schedule_.size() < 1) throw InvalidArgument("dictionary needs at least one measurement");
  if (entries_.rows() != schedule_.size() || entries_.cols() != grid_.size()) {
    throw InvalidArgument("dictionary shape disagrees with its schedule and grid");
  }
  if (!entries_.allFinite()) throw InvalidArgument("dictionary entries must be finite");
}

Dictionary Dictionary::from_matrix(Eigen::MatrixXd entries) {
  if (entries.rows() < 1 || entries.cols() < 1) {
    throw InvalidArgument("dictionary matrix must be non-empty");
  }
  const auto q = static_cast<std::size_t>(entries.cols());
  const AxisSpec axis{0.0, static_cast<double>(q - 1), q, Spacing::linear};
  AcquisitionSchedule schedule{Kernel::explicit_matrix,
                               Eigen::VectorXd::LinSpaced(entries.rows(), 0.0,
                                                          static_cast<double>(entries.rows() - 1))};
  return Dictionary(std::move(entries), build_grid(std::span(&axis, 1)), std::move(schedule));
}

Dictionary build_dictionary(const AcquisitionSchedule& schedule, const SpectralGrid& grid) {
  if (schedule.kernel == Kernel::explicit_matrix) {
    throw InvalidArgument("build_dictionary: explicit kernels are built with from_matrix");
  }
  const auto arity = static_cast<Eigen::Index>(kernel_arity(schedule.kernel));
  if (schedule.entries.cols() != arity) {
    throw InvalidArgument("schedule tuples do not match the kernel arity");
  }
  if (static_cast<Eigen::Index>(grid.dimensions()) != arity) {
    throw InvalidArgument("grid dimensionality does not match the kernel arity");
  }
  if (schedule.size() < 1) throw InvalidArgument("schedule must have at least one entry");
  if ((schedule.entries.array() < 0.0).any() || !schedule.entries.allFinite()) {
    throw InvalidArgument("acquisition parameters must be finite and nonnegative");
  }

  const Eigen::Index p_count = schedule.size();
  const Eigen::Index q_count = grid.size();
  Eigen::MatrixXd k(p_count, q_count);
  for (Eigen::Index q = 0; q < q_count; ++q) {
    const Eigen::VectorXd gamma = grid.points().row(q).transpose();
    const double w = grid.weights()(q);
    for (Eigen::Index p = 0; p < p_count; ++p) {
      k(p, q) = w * kernel_value(schedule.kernel, schedule.entries.row(p).transpose(), gamma);
    }
  }
  return Dictionary(std::move(k), grid, schedule);
}

LowRankDictionary::LowRankDictionary(Eigen::VectorXd singular_values,
                                     Eigen::MatrixXd left_vectors,
                                     Eigen::MatrixXd right_vectors, double frobenius_error)
    : singular_values_(std::move(singular_values)),
      left_(std::move(left_vectors)),
      right_(std::move(right_vectors)),
      frobenius_error_(frobenius_error) {
  const Eigen::Index r = singular_values_.size();
  if (left_.cols() != r || right_.cols() != r) {
    throw InvalidArgument("LowRankDictionary: factor counts disagree with the rank");
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!(singular_values_(i) > 0.0)) {
      throw InvalidArgument("LowRankDictionary: singular values must be positive");
    }
    if (i > 0 && singular_values_(i) > singular_values_(i - 1)) {
      throw InvalidArgument("LowRankDictionary: singular values must be non-increasing");
    }
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(r, r);
  if (r > 0 && ((left_.transpose() * left_ - eye).cwiseAbs().maxCoeff() > 1e-10 ||
                (right_.transpose() * right_ - eye).cwiseAbs().maxCoeff() > 1e-10)) {
    throw InvalidArgument("LowRankDictionary: singular vectors are not orthonormal");
  }
}

Eigen::MatrixXd LowRankDictionary::reconstruct() const {
  return left_ * singular_values_.asDiagonal() * right_.transpose();
}

Eigen::MatrixXd LowRankDictionary::apply_adjoint(const Eigen::MatrixXd& m) const {
  if (m.rows() != measurements()) {
    throw InvalidArgument("apply_adjoint: data rows do not match the dictionary");
  }
  const Eigen::MatrixXd projected = singular_values_.asDiagonal() * (left_.transpose() * m);
  return right_ * projected;
}

LowRankDictionary truncate_dictionary(const Dictionary& dict, double tolerance) {
  if (!(tolerance > 0.0 && tolerance < 1.0)) {
    throw InvalidArgument("truncation tolerance must lie in (0, 1)");
  }
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(dict.entries(),
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const Eigen::Index n = s.size();

  // tail(r) = sum_{i >= r} s_i^2, accumulated from the small end.
  Eigen::VectorXd tail(n + 1);
  tail(n) = 0.0;
  for (Eigen::Index i = n - 1; i >= 0; --i) tail(i) = tail(i + 1) + s(i) * s(i);
  const double total = tail(0);
  if (!(total > 0.0)) throw InvalidArgument("cannot truncate an all-zero dictionary");

  Eigen::Index rank = n;
  for (Eigen::Index r = 0; r <= n; ++r) {
    if (std::sqrt(tail(r) / total) < tolerance) {
      rank = r;
      break;
    }
  }
  const double error = std::sqrt(tail(rank) / total);
  return LowRankDictionary(s.head(rank), svd.matrixU().leftCols(rank),
                           svd.matrixV().leftCols(rank), error);
}

Eigen::VectorXd apply_regularized_inverse(const LowRankDictionary& lrd, double beta,
                                          const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (x.size() != lrd.spectral_size()) {
    throw InvalidArgument("apply_regularized_inverse: vector length differs from Q");
  }
  const auto& s = lrd.singular_values();
  const Eigen::ArrayXd s2 = s.array().square();
  const Eigen::VectorXd coeff = (s2 / (beta * beta + beta * s2)).matrix();
  const Eigen::VectorXd projected = coeff.asDiagonal() * (lrd.right_vectors().transpose() * x);
  return x / beta - lrd.right_vectors() * projected;
}

RegularizedInverse RegularizedInverse::low_rank(const LowRankDictionary& lrd, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  RegularizedInverse inv;
  inv.beta_ = beta;
  inv.low_rank_ = true;
  inv.size_ = lrd.spectral_size();
  inv.basis_ = lrd.right_vectors();
  const Eigen::ArrayXd s2 = lrd.singular_values().array().square();
  inv.coefficients_ = (s2 / (beta * beta + beta * s2)).matrix();
  return inv;
}

RegularizedInverse RegularizedInverse::dense(const Dictionary& dict, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  RegularizedInverse inv;
  inv.beta_ = beta;
  inv.low_rank_ = false;
  inv.size_ = dict.spectral_size();
  Eigen::MatrixXd gram = dict.entries().transpose() * dict.entries();
  gram.diagonal().array() += beta;
  inv.dense_ = gram.llt().solve(Eigen::MatrixXd::Identity(inv.size_, inv.size_));
  return inv;
}

void RegularizedInverse::apply_group(const Eigen::Ref<const Eigen::MatrixXd>& in,
                                     Eigen::Ref<Eigen::MatrixXd> out) const {
  if (low_rank_) {
    Eigen::MatrixXd projected = basis_.transpose() * in;
    projected = coefficients_.asDiagonal() * projected;
    out.noalias() = in / beta_;
    out.noalias() -= basis_ * projected;
  } else {
    out.noalias() = dense_ * in;
  }
}

void RegularizedInverse::apply(const Eigen::Ref<const Eigen::MatrixXd>& in,
                               Eigen::Ref<Eigen::MatrixXd> out) const {
  if (in.rows() != size_ || out.rows() != size_ || out.cols() != in.cols()) {
    throw InvalidArgument("RegularizedInverse::apply: shape mismatch");
  }
  for (Eigen::Index c = 0; c < in.cols(); c += kColumnBlock) {
    const Eigen::Index width = std::min(kColumnBlock, in.cols() - c);
    apply_group(in.middleCols(c, width), out.middleCols(c, width));
  }
}

Eigen::MatrixXd RegularizedInverse::apply(const Eigen::MatrixXd& in) const {
  Eigen::MatrixXd out(in.rows(), in.cols());
  apply(in, out);
  return out;
}

}  // namespace pvcm
