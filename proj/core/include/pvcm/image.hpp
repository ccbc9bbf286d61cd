#pragma once

#include <Eigen/Dense>

namespace pvcm {

/// The P x N measurement stack m; column n holds voxel n's P measurements.
class MeasuredStack {
 public:
  /// Throws InvalidArgument on non-finite entries.
  explicit MeasuredStack(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index measurements() const { return values_.rows(); }
  Eigen::Index voxels() const { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
};

/// The Q x N spectroscopic image f; column n holds voxel n's spectrum.
struct SpectroscopicImage {
  Eigen::MatrixXd values;

  Eigen::Index spectral_size() const { return values.rows(); }
  Eigen::Index voxels() const { return values.cols(); }
  bool is_nonnegative() const { return (values.array() >= 0.0).all(); }
};

}  // namespace pvcm
