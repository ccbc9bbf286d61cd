#include <doctest.h>

#include <cmath>
#include <cstring>

#include "test_support.hpp"

using namespace pvcm;
using pvcm::testing::Gen;

namespace {

struct Setup {
  Dictionary dict;
  SpatialGraph graph;
  PhantomSpec spec;
};

Setup small_setup() {
  const auto preset = standard_phantom();
  return {preset.dictionary(), build_spatial_graph(preset.mask()), preset.spec};
}

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("noiseless phantom satisfies the forward model") {
  auto s = small_setup();
  s.spec.noise_sigma = 0.0;
  const auto ph = generate_phantom(s.spec, s.dict, s.graph);
  CHECK((ph.data.values() - s.dict.entries() * ph.f_true.values).norm() == 0.0);
  CHECK(ph.f_true.is_nonnegative());
  CHECK(ph.f_true.values.maxCoeff() > 0.0);
}

TEST_CASE("zero amplitudes give pure noise with the requested sigma") {
  auto s = small_setup();
  for (auto& c : s.spec.compartments) c.amplitude = 0.0;
  s.spec.noise_sigma = 0.3;
  // 16 x 64 = 1024 draws per seed; pool several seeds to pass 10^4
  std::vector<double> all;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    s.spec.seed = seed;
    const auto ph = generate_phantom(s.spec, s.dict, s.graph);
    CHECK(ph.f_true.values.isZero(0.0));
    all.insert(all.end(), ph.data.values().data(), ph.data.values().data() + ph.data.values().size());
  }
  REQUIRE(all.size() >= 10000);
  double mean = 0.0;
  for (double v : all) mean += v;
  mean /= static_cast<double>(all.size());
  double var = 0.0;
  for (double v : all) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(all.size() - 1));
  CHECK(std::abs(sd - 0.3) < 0.05 * 0.3);
  CHECK(std::abs(mean) < 4.0 * 0.3 / std::sqrt(static_cast<double>(all.size())));
}

TEST_CASE("same seed gives bit-identical phantoms, different seeds differ") {
  auto s = small_setup();
  const auto a = generate_phantom(s.spec, s.dict, s.graph);
  const auto b = generate_phantom(s.spec, s.dict, s.graph);
  CHECK(bit_equal(a.data.values(), b.data.values()));
  CHECK(bit_equal(a.f_true.values, b.f_true.values));
  s.spec.seed += 1;
  const auto c = generate_phantom(s.spec, s.dict, s.graph);
  CHECK_FALSE(bit_equal(a.data.values(), c.data.values()));
}

TEST_CASE("NormalRng reference values") {
  // first deviates for seed 42, from the documented construction
  std::mt19937_64 engine(42);
  const double u1 = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  const double u2 = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  NormalRng rng(42);
  CHECK(rng() == r * std::cos(2.0 * M_PI * u2));
  CHECK(rng() == r * std::sin(2.0 * M_PI * u2));
}

TEST_CASE("regions outside the mask are rejected") {
  const auto preset = standard_phantom();
  const auto dict = preset.dictionary();
  std::vector<double> mask(64, 1.0);
  mask[0] = 0.0;
  const auto graph = build_spatial_graph(NdArray({8, 8}, mask));
  CHECK_THROWS_AS(generate_phantom(preset.spec, dict, graph), InvalidArgument);

  auto spec = preset.spec;
  spec.compartments[0].region.end = {9, 8, 1};
  CHECK_THROWS_AS(generate_phantom(spec, dict, build_spatial_graph(preset.mask())), InvalidArgument);
  spec = preset.spec;
  spec.image_shape = {4, 16};
  CHECK_THROWS_AS(generate_phantom(spec, dict, build_spatial_graph(preset.mask())), InvalidArgument);
  spec = preset.spec;
  spec.compartments[0].amplitude = -1.0;
  CHECK_THROWS_AS(generate_phantom(spec, dict, build_spatial_graph(preset.mask())), InvalidArgument);
}

TEST_CASE("compartment spectrum peaks at its center") {
  const auto preset = standard_phantom();
  const auto dict = preset.dictionary();
  const Compartment c{{dict.grid().points()(10, 0)}, {0.3}, {}, 2.0};
  const auto s = compartment_spectrum(c, dict.grid());
  Eigen::Index arg = 0;
  CHECK(s.maxCoeff(&arg) == doctest::Approx(2.0));
  CHECK(arg == 10);
}

TEST_CASE("integrate_components examples") {
  Gen gen(9);
  const SpectroscopicImage f{gen.nonnegative(10, 7)};
  const auto total = integrate_components(f, {{0, 10}});
  CHECK((total[0] - f.values.colwise().sum().transpose()).norm() < 1e-14);

  const auto parts = integrate_components(f, {{0, 3}, {3, 4}, {4, 10}});
  CHECK((parts[0] + parts[1] + parts[2] - total[0]).norm() < 1e-13);

  Eigen::MatrixXd one = Eigen::MatrixXd::Zero(10, 7);
  one.row(5) = gen.nonnegative(1, 7) + Eigen::MatrixXd::Ones(1, 7);
  const auto ind = integrate_components(SpectroscopicImage{one}, {{0, 5}, {5, 6}, {4, 8}, {6, 10}});
  CHECK(ind[0].isZero(0.0));
  CHECK((ind[1].array() > 0).all());
  CHECK((ind[2].array() > 0).all());
  CHECK(ind[3].isZero(0.0));

  CHECK_THROWS_AS(integrate_components(f, {{0, 11}}), InvalidArgument);
  CHECK_THROWS_AS(integrate_components(f, {{-1, 2}}), InvalidArgument);
  CHECK_THROWS_AS(integrate_components(f, {{4, 4}}), InvalidArgument);
}

TEST_CASE("integrate_components is linear") {
  Gen gen(10);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index q = gen.integer(2, 12), n = gen.integer(1, 9);
    const Eigen::MatrixXd a = gen.matrix(q, n), b = gen.matrix(q, n);
    const double alpha = gen.normal();
    const Eigen::Index lo = gen.integer(0, static_cast<int>(q) - 1);
    const Eigen::Index hi = gen.integer(static_cast<int>(lo) + 1, static_cast<int>(q));
    const std::vector<SpectralRange> r{{lo, hi}};
    const auto lhs = integrate_components(SpectroscopicImage{alpha * a + b}, r)[0];
    const auto rhs = (alpha * integrate_components(SpectroscopicImage{a}, r)[0] +
                      integrate_components(SpectroscopicImage{b}, r)[0]).eval();
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("presets have the documented sizes") {
  const auto s = standard_phantom();
  const auto d = s.dictionary();
  CHECK(d.measurements() == 16);
  CHECK(d.spectral_size() == 32);
  CHECK(s.mask().size() == 64);
  CHECK(s.lambda == 1.0);
  const auto t = diffusion_phantom(32);
  const auto dt = t.dictionary();
  CHECK(dt.measurements() == 24);
  CHECK(dt.spectral_size() == 400);
  CHECK(t.mask().size() == 1024);
}
