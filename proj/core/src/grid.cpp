#include "pvcm/grid.hpp"

#include <cmath>
#include <string>

#include "pvcm/error.hpp"

namespace pvcm {
namespace {

std::vector<double> axis_points(const AxisSpec& axis) {
  if (axis.count == 0) throw InvalidArgument("grid axis count must be >= 1");
  if (axis.spacing == Spacing::logarithmic && (axis.min <= 0.0 || axis.max <= 0.0)) {
    throw InvalidArgument("logarithmic grid axis needs positive bounds");
  }
  if (!std::isfinite(axis.min) || !std::isfinite(axis.max)) {
    throw InvalidArgument("grid axis bounds must be finite");
  }
  if (axis.count == 1) return {axis.min};
  if (!(axis.min < axis.max)) {
    throw InvalidArgument("grid axis needs min < max when count > 1");
  }
  std::vector<double> points(axis.count);
  const double n = static_cast<double>(axis.count - 1);
  if (axis.spacing == Spacing::linear) {
    for (std::size_t i = 0; i < axis.count; ++i) {
      points[i] = axis.min + (axis.max - axis.min) * static_cast<double>(i) / n;
    }
  } else {
    const double lo = std::log(axis.min);
    const double hi = std::log(axis.max);
    for (std::size_t i = 0; i < axis.count; ++i) {
      points[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / n);
    }
    // Pin the endpoints exactly; exp(log(x)) can drift by an ulp.
    points.front() = axis.min;
    points.back() = axis.max;
  }
  return points;
}

double native(double value, Spacing spacing) {
  return spacing == Spacing::logarithmic ? std::log(value) : value;
}

}  // namespace

std::vector<double> trapezoid_weights(std::span<const double> coords) {
  const std::size_t n = coords.size();
  if (n == 0) return {};
  if (n == 1) return {1.0};
  std::vector<double> w(n);
  w[0] = 0.5 * (coords[1] - coords[0]);
  w[n - 1] = 0.5 * (coords[n - 1] - coords[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (coords[i + 1] - coords[i - 1]);
  return w;
}

SpectralGrid::SpectralGrid(std::vector<AxisSpec> axes,
                           std::vector<std::vector<double>> axis_values,
                           std::vector<std::vector<double>> axis_weights)
    : axes_(std::move(axes)), axis_values_(std::move(axis_values)) {
  if (axes_.empty() || axis_values_.size() != axes_.size() ||
      axis_weights.size() != axes_.size()) {
    throw InvalidArgument("SpectralGrid: axis bookkeeping is inconsistent");
  }
  Eigen::Index total = 1;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const auto& values = axis_values_[a];
    if (values.empty() || values.size() != axis_weights[a].size()) {
      throw InvalidArgument("SpectralGrid: axis values and weights disagree");
    }
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (!(values[i - 1] < values[i])) {
        throw InvalidArgument("SpectralGrid: axis points must be strictly increasing");
      }
    }
    for (double w : axis_weights[a]) {
      if (!(w > 0.0)) throw InvalidArgument("SpectralGrid: weights must be positive");
    }
    total *= static_cast<Eigen::Index>(values.size());
  }

  points_.resize(total, static_cast<Eigen::Index>(axes_.size()));
  weights_.resize(total);
  for (Eigen::Index q = 0; q < total; ++q) {
    Eigen::Index rest = q;
    double w = 1.0;
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      const auto n = static_cast<Eigen::Index>(axis_values_[a].size());
      const auto i = static_cast<std::size_t>(rest % n);
      rest /= n;
      points_(q, static_cast<Eigen::Index>(a)) = axis_values_[a][i];
      w *= axis_weights[a][i];
    }
    weights_(q) = w;
  }
}

std::vector<std::size_t> SpectralGrid::axis_shape() const {
  std::vector<std::size_t> shape;
  shape.reserve(axis_values_.size());
  for (const auto& values : axis_values_) shape.push_back(values.size());
  return shape;
}

double SpectralGrid::coordinate(Eigen::Index q, std::size_t axis) const {
  return native(points_(q, static_cast<Eigen::Index>(axis)), axes_[axis].spacing);
}

SpectralGrid build_grid(std::span<const AxisSpec> axes) {
  if (axes.empty()) throw InvalidArgument("build_grid: at least one axis is required");
  std::vector<AxisSpec> specs(axes.begin(), axes.end());
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> weights;
  for (const auto& axis : specs) {
    auto points = axis_points(axis);
    std::vector<double> coords(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) coords[i] = native(points[i], axis.spacing);
    weights.push_back(trapezoid_weights(coords));
    values.push_back(std::move(points));
  }
  return SpectralGrid(std::move(specs), std::move(values), std::move(weights));
}

}  // namespace pvcm
