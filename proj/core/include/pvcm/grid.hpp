#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pvcm {

enum class Spacing { linear, logarithmic };

/// One axis of a tensor-product spectral grid.
struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  Spacing spacing = Spacing::linear;
};

/// Tensor-product grid of spectral parameters (T2, T1, diffusivity, ...)
/// with quadrature weights. Point q enumerates axes with the first axis
/// varying fastest.
class SpectralGrid {
 public:
  SpectralGrid(std::vector<AxisSpec> axes, std::vector<std::vector<double>> axis_values,
               std::vector<std::vector<double>> axis_weights);

  Eigen::Index size() const { return points_.rows(); }
  std::size_t dimensions() const { return axes_.size(); }

  /// Q x dimensions(); row q is the parameter tuple of grid point q.
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<AxisSpec>& axes() const { return axes_; }
  std::vector<std::size_t> axis_shape() const;
  const std::vector<double>& axis_values(std::size_t axis) const { return axis_values_[axis]; }

  /// Parameter of point q along `axis` in the axis' native coordinate:
  /// the value itself for linear axes, its natural log for logarithmic ones.
  double coordinate(Eigen::Index q, std::size_t axis) const;

 private:
  std::vector<AxisSpec> axes_;
  std::vector<std::vector<double>> axis_values_;
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

/// Builds the tensor grid. Per-axis weights use the trapezoidal rule in the
/// native coordinate (natural log for logarithmic axes); a one-point axis has
/// weight 1. Throws InvalidArgument on count == 0, min >= max with count > 1,
/// or a non-positive bound on a logarithmic axis.
SpectralGrid build_grid(std::span<const AxisSpec> axes);

/// Trapezoidal weights for sorted abscissae; a single abscissa gets weight 1.
std::vector<double> trapezoid_weights(std::span<const double> coords);

}  // namespace pvcm
