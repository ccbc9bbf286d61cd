#include "pvcm/phantom.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "pvcm/error.hpp"

namespace pvcm {

double NormalRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NormalRng::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Eigen::VectorXd compartment_spectrum(const Compartment& c, const SpectralGrid& grid) {
  const std::size_t dims = grid.dimensions();
  if (c.center.size() != dims || c.width.size() != dims) {
    throw InvalidArgument("compartment center and width need one entry per grid axis");
  }
  if (!(c.amplitude >= 0.0) || !std::isfinite(c.amplitude)) {
    throw InvalidArgument("compartment amplitude must be finite and nonnegative");
  }
  std::vector<double> center(dims);
  for (std::size_t a = 0; a < dims; ++a) {
    if (!(c.width[a] > 0.0)) throw InvalidArgument("compartment width must be positive");
    if (grid.axes()[a].spacing == Spacing::logarithmic) {
      if (!(c.center[a] > 0.0)) {
        throw InvalidArgument("compartment center on a logarithmic axis must be positive");
      }
      center[a] = std::log(c.center[a]);
    } else {
      center[a] = c.center[a];
    }
  }
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index q = 0; q < grid.size(); ++q) {
    double e = 0.0;
    for (std::size_t a = 0; a < dims; ++a) {
      const double t = (grid.coordinate(q, a) - center[a]) / c.width[a];
      e += t * t;
    }
    out(q) = c.amplitude * std::exp(-0.5 * e);
  }
  return out;
}

Phantom generate_phantom(const PhantomSpec& spec, const Dictionary& dict,
                         const SpatialGraph& graph) {
  if (!graph.has_lattice() || graph.lattice_shape() != spec.image_shape) {
    throw InvalidArgument("phantom image shape does not match the spatial graph lattice");
  }
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw InvalidArgument("noise sigma must be finite and nonnegative");
  }
  const Eigen::Index q_size = dict.spectral_size();
  const Eigen::Index n_voxels = graph.voxels();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(q_size, n_voxels);

  LatticeCoord dims{1, 1, 1};
  for (std::size_t a = 0; a < spec.image_shape.size(); ++a) dims[a] = spec.image_shape[a];

  for (const auto& c : spec.compartments) {
    for (std::size_t a = 0; a < 3; ++a) {
      if (c.region.begin[a] > c.region.end[a] || c.region.end[a] > dims[a]) {
        throw InvalidArgument("compartment region lies outside the image");
      }
    }
    const Eigen::VectorXd bump = compartment_spectrum(c, dict.grid());
    for (std::size_t z = c.region.begin[2]; z < c.region.end[2]; ++z) {
      for (std::size_t y = c.region.begin[1]; y < c.region.end[1]; ++y) {
        for (std::size_t x = c.region.begin[0]; x < c.region.end[0]; ++x) {
          const auto n = graph.voxel_at({x, y, z});
          if (!n) throw InvalidArgument("compartment region covers voxels outside the mask");
          f.col(*n) += bump;
        }
      }
    }
  }

  Eigen::MatrixXd m = dict.entries() * f;
  if (spec.noise_sigma > 0.0) {
    NormalRng rng(spec.seed);
    for (Eigen::Index n = 0; n < n_voxels; ++n) {
      for (Eigen::Index p = 0; p < m.rows(); ++p) m(p, n) += spec.noise_sigma * rng();
    }
  }
  return Phantom{SpectroscopicImage{std::move(f)}, MeasuredStack(std::move(m))};
}

std::vector<Eigen::VectorXd> integrate_components(const SpectroscopicImage& f,
                                                  const std::vector<SpectralRange>& regions) {
  std::vector<Eigen::VectorXd> maps;
  maps.reserve(regions.size());
  for (const auto& [first, last] : regions) {
    if (first < 0 || first >= last || last > f.spectral_size()) {
      throw InvalidArgument("spectral region must satisfy 0 <= first < last <= Q");
    }
    maps.emplace_back(f.values.middleRows(first, last - first).colwise().sum().transpose());
  }
  return maps;
}

Dictionary PhantomPreset::dictionary() const {
  return build_dictionary(schedule, build_grid(axes));
}

NdArray PhantomPreset::mask() const {
  const std::size_t cells = std::accumulate(spec.image_shape.begin(), spec.image_shape.end(),
                                            std::size_t{1}, std::multiplies<>());
  return NdArray(spec.image_shape, std::vector<double>(cells, 1.0));
}

namespace {

Eigen::VectorXd log_space(double lo, double hi, Eigen::Index n) {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    out(i) = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  out(0) = lo;
  out(n - 1) = hi;
  return out;
}

}  // namespace

PhantomPreset standard_phantom(std::uint64_t seed) {
  PhantomPreset p;
  p.schedule.kernel = Kernel::t2_exp;
  p.schedule.entries = log_space(0.002, 2.0, 16);
  p.axes = {AxisSpec{0.002, 5.0, 32, Spacing::logarithmic}};
  p.spec.image_shape = {8, 8};
  p.spec.compartments = {
      Compartment{{0.02}, {0.25}, SpatialRegion{{0, 0, 0}, {5, 8, 1}}, 1.0},
      Compartment{{0.08}, {0.3}, SpatialRegion{{3, 0, 0}, {8, 8, 1}}, 1.0},
  };
  p.spec.noise_sigma = 0.005;
  p.spec.seed = seed;
  p.lambda = 1.0;
  return p;
}

PhantomPreset diffusion_phantom(std::size_t side, std::uint64_t seed) {
  if (side < 4) throw InvalidArgument("diffusion phantom needs at least a 4 x 4 lattice");
  PhantomPreset p;
  p.schedule.kernel = Kernel::diffusion_t2;
  const double b_values[] = {0.0, 250.0, 500.0, 1000.0, 2000.0, 3000.0};
  const double echo_times[] = {0.02, 0.05, 0.1, 0.2};
  p.schedule.entries.resize(24, 2);
  for (int t = 0; t < 4; ++t) {
    for (int b = 0; b < 6; ++b) {
      p.schedule.entries(6 * t + b, 0) = b_values[b];
      p.schedule.entries(6 * t + b, 1) = echo_times[t];
    }
  }
  p.axes = {AxisSpec{1e-4, 5e-3, 20, Spacing::logarithmic},
            AxisSpec{0.01, 0.5, 20, Spacing::logarithmic}};
  p.spec.image_shape = {side, side};
  const auto at = [side](std::size_t v) { return v * side / 32; };
  p.spec.compartments = {
      Compartment{{2e-3, 0.08}, {0.25, 0.25}, SpatialRegion{{0, 0, 0}, {at(20), side, 1}}, 1.0},
      Compartment{{3e-4, 0.03}, {0.3, 0.3}, SpatialRegion{{at(12), 0, 0}, {side, side, 1}}, 0.7},
      Compartment{{1e-3, 0.25}, {0.3, 0.3}, SpatialRegion{{0, at(10), 0}, {side, at(22), 1}}, 0.5},
  };
  p.spec.noise_sigma = 0.002;
  p.spec.seed = seed;
  p.lambda = 0.001;
  return p;
}

}  // namespace pvcm
