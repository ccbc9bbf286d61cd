#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pvcm/array_io.hpp"
#include "pvcm/dictionary.hpp"
#include "pvcm/image.hpp"
#include "pvcm/spatial.hpp"

namespace pvcm {

/// Half-open lattice box [begin, end) per axis; unused axes are [0, 1).
struct SpatialRegion {
  LatticeCoord begin{0, 0, 0};
  LatticeCoord end{1, 1, 1};
};

/// A Gaussian bump in the spectral domain placed at every voxel of a region.
/// center holds one physical parameter per grid axis (e.g. T2 in seconds);
/// width is the standard deviation per axis in the axis' native coordinate
/// (natural log units on logarithmic axes).
struct Compartment {
  std::vector<double> center;
  std::vector<double> width;
  SpatialRegion region;
  double amplitude = 1.0;
};

struct PhantomSpec {
  std::vector<std::size_t> image_shape;
  std::vector<Compartment> compartments;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Standard normal deviates from mt19937_64 through the Box-Muller
/// transform. Each 64-bit draw x becomes u = (x >> 11) * 2^-53; a pair
/// (u1, u2) yields sqrt(-2 ln(1 - u1)) * cos(2 pi u2) and then the matching
/// sin term.
class NormalRng {
 public:
  static constexpr std::string_view kName = "mt19937_64/box-muller";

  explicit NormalRng(std::uint64_t seed) : engine_(seed) {}
  double operator()();

 private:
  double uniform();

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Phantom {
  SpectroscopicImage f_true;
  MeasuredStack data;
};

/// Builds f_true from the compartments and m = K f_true + sigma * noise.
/// Noise is drawn voxel by voxel, measurement by measurement (column-major),
/// and not at all when sigma is 0. Throws InvalidArgument when a region
/// touches a voxel outside the mask or the shapes disagree.
Phantom generate_phantom(const PhantomSpec& spec, const Dictionary& dict, const SpatialGraph& graph);

/// Spectral value of one compartment at every grid point.
Eigen::VectorXd compartment_spectrum(const Compartment& compartment, const SpectralGrid& grid);

/// Half-open spectral index range [first, second).
using SpectralRange = std::pair<Eigen::Index, Eigen::Index>;

/// map_j[n] = sum over q in regions[j] of f(q, n).
std::vector<Eigen::VectorXd> integrate_components(const SpectroscopicImage& f,
                                                  const std::vector<SpectralRange>& regions);

/// Ready-made phantom configuration: acquisition, grid, lattice and objects.
struct PhantomPreset {
  AcquisitionSchedule schedule;
  std::vector<AxisSpec> axes;
  PhantomSpec spec;
  double lambda = 1.0;

  Dictionary dictionary() const;
  /// All-ones mask of spec.image_shape.
  NdArray mask() const;
};

/// 8 x 8 lattice, two overlapping T2 compartments, P = 16 log-spaced echo
/// times, Q = 32 log-spaced T2 values, sigma = 0.005, lambda = 1.
PhantomPreset standard_phantom(std::uint64_t seed = 1);

/// 32 x 32 lattice, three diffusion-T2 compartments, P = 24 (6 b-values x 4
/// echo times), Q = 20 x 20.
PhantomPreset diffusion_phantom(std::size_t side = 32, std::uint64_t seed = 1);

}  // namespace pvcm
