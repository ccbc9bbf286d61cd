#include <doctest.h>

#include <cmath>

#include "test_support.hpp"

using namespace pvcm;
using pvcm::testing::Gen;
using pvcm::testing::rel_diff;

namespace {

SpectralGrid one_axis(double lo, double hi, std::size_t n, Spacing s) {
  const AxisSpec axis{lo, hi, n, s};
  return build_grid(std::span<const AxisSpec>(&axis, 1));
}

// Q x Q random matrix with prescribed singular values.
Eigen::MatrixXd with_singular_values(Gen& gen, Eigen::Index rows, Eigen::Index cols,
                                     const Eigen::VectorXd& s) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qu(gen.matrix(rows, rows));
  Eigen::HouseholderQR<Eigen::MatrixXd> qv(gen.matrix(cols, cols));
  const Eigen::MatrixXd u = qu.householderQ() * Eigen::MatrixXd::Identity(rows, rows);
  const Eigen::MatrixXd v = qv.householderQ() * Eigen::MatrixXd::Identity(cols, cols);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index i = 0; i < s.size(); ++i) sigma(i, i) = s(i);
  return u * sigma * v.transpose();
}

}  // namespace

TEST_CASE("build_grid examples") {
  const auto log3 = one_axis(1, 100, 3, Spacing::logarithmic);
  CHECK(log3.points()(0, 0) == 1.0);
  CHECK(log3.points()(1, 0) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(log3.points()(2, 0) == 100.0);

  const auto single = one_axis(0, 1, 1, Spacing::linear);
  CHECK(single.size() == 1);
  CHECK(single.weights()(0) == 1.0);

  const auto lin = one_axis(0, 4, 5, Spacing::linear);
  const double expected[] = {0.5, 1, 1, 1, 0.5};
  for (int i = 0; i < 5; ++i) CHECK(lin.weights()(i) == doctest::Approx(expected[i]));
}

TEST_CASE("build_grid errors") {
  CHECK_THROWS_AS(one_axis(0, 1, 0, Spacing::linear), InvalidArgument);
  CHECK_THROWS_AS(one_axis(0, 1, 3, Spacing::logarithmic), InvalidArgument);
  CHECK_THROWS_AS(one_axis(-1, 1, 3, Spacing::logarithmic), InvalidArgument);
  CHECK_THROWS_AS(one_axis(2, 1, 3, Spacing::linear), InvalidArgument);
}

TEST_CASE("log axis weights are trapezoid weights in log coordinate") {
  const auto g = one_axis(1e-3, 1.0, 4, Spacing::logarithmic);
  const double h = std::log(1000.0) / 3.0;
  CHECK(g.weights()(0) == doctest::Approx(h / 2));
  CHECK(g.weights()(1) == doctest::Approx(h));
  CHECK(g.weights()(3) == doctest::Approx(h / 2));
}

TEST_CASE("grid invariants on random axis specs") {
  Gen gen(3);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<AxisSpec> axes;
    const int dims = gen.integer(1, 3);
    for (int a = 0; a < dims; ++a) {
      const double lo = gen.uniform(0.001, 1.0);
      axes.push_back({lo, lo * gen.uniform(1.5, 100.0), static_cast<std::size_t>(gen.integer(1, 6)),
                      gen.coin() ? Spacing::linear : Spacing::logarithmic});
    }
    const auto g = build_grid(axes);
    std::size_t product = 1;
    for (auto c : g.axis_shape()) product *= c;
    CHECK(product == static_cast<std::size_t>(g.size()));
    CHECK((g.weights().array() > 0.0).all());
    for (std::size_t a = 0; a < g.dimensions(); ++a) {
      const auto& vals = g.axis_values(a);
      for (std::size_t i = 1; i < vals.size(); ++i) CHECK(vals[i] > vals[i - 1]);
    }
    // first axis varies fastest
    if (g.axis_shape()[0] > 1) CHECK(g.points()(1, 0) == g.axis_values(0)[1]);
  }
}

TEST_CASE("build_dictionary kernel values") {
  AcquisitionSchedule s;
  s.kernel = Kernel::t2_exp;
  s.entries = Eigen::MatrixXd(2, 1);
  s.entries << 0.05, 0.0;
  const auto grid = one_axis(0.05, 0.05, 1, Spacing::linear);
  const auto d = build_dictionary(s, grid);
  CHECK(d.entries()(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(d.entries()(1, 0) == 1.0);

  Eigen::VectorXd theta(2), gamma(2);
  theta << 0.1, 0.02;
  gamma << 0.5, 0.04;
  CHECK(kernel_value(Kernel::inversion_recovery_mse, theta, gamma) ==
        doctest::Approx((1 - 2 * std::exp(-0.2)) * std::exp(-0.5)));
  theta << 1000, 0.02;
  gamma << 1e-3, 0.04;
  CHECK(kernel_value(Kernel::diffusion_t2, theta, gamma) ==
        doctest::Approx(std::exp(-1.0) * std::exp(-0.5)));
  // short inversion times give negative entries; those are kept
  theta << 0.01, 0.0;
  gamma << 1.0, 0.04;
  CHECK(kernel_value(Kernel::inversion_recovery_mse, theta, gamma) < 0.0);
}

TEST_CASE("DR-CSI scale dictionary is 28 x 4900") {
  AcquisitionSchedule s;
  s.kernel = Kernel::diffusion_t2;
  s.entries.resize(28, 2);
  for (int p = 0; p < 28; ++p) {
    s.entries(p, 0) = 500.0 * (p % 7);
    s.entries(p, 1) = 0.06 + 0.02 * (p / 7);
  }
  const std::vector<AxisSpec> axes{{1e-5, 5e-3, 70, Spacing::logarithmic},
                                   {0.005, 2.0, 70, Spacing::logarithmic}};
  const auto d = build_dictionary(s, build_grid(axes));
  CHECK(d.measurements() == 28);
  CHECK(d.spectral_size() == 4900);
  CHECK(d.entries().allFinite());
}

TEST_CASE("build_dictionary errors") {
  const auto grid = one_axis(0.01, 1.0, 4, Spacing::logarithmic);
  AcquisitionSchedule s;
  s.kernel = Kernel::diffusion_t2;
  s.entries = Eigen::MatrixXd::Ones(3, 1);
  CHECK_THROWS_AS(build_dictionary(s, grid), InvalidArgument);
  s.kernel = Kernel::t2_exp;
  s.entries = Eigen::MatrixXd::Ones(3, 2);
  CHECK_THROWS_AS(build_dictionary(s, grid), InvalidArgument);
  s.entries = -Eigen::MatrixXd::Ones(3, 1);
  CHECK_THROWS_AS(build_dictionary(s, grid), InvalidArgument);
  Eigen::VectorXd theta(1), gamma(1);
  theta << 0.1;
  gamma << -1.0;
  CHECK_THROWS_AS(kernel_value(Kernel::t2_exp, theta, gamma), InvalidArgument);
}

TEST_CASE("T2Exp entries lie in (0, w_q] and decay with TE") {
  Gen gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto grid = one_axis(0.005, 2.0, static_cast<std::size_t>(gen.integer(2, 20)),
                               Spacing::logarithmic);
    AcquisitionSchedule s;
    s.kernel = Kernel::t2_exp;
    const int p = gen.integer(1, 12);
    s.entries.resize(p, 1);
    double te = gen.uniform(0.0, 0.01);
    for (int i = 0; i < p; ++i) {
      s.entries(i, 0) = te;
      te += gen.uniform(0.001, 0.05);
    }
    const auto d = build_dictionary(s, grid);
    for (Eigen::Index q = 0; q < d.spectral_size(); ++q) {
      for (Eigen::Index i = 0; i < d.measurements(); ++i) {
        CHECK(d.entries()(i, q) > 0.0);
        CHECK(d.entries()(i, q) <= grid.weights()(q));
        if (i > 0) CHECK(d.entries()(i, q) <= d.entries()(i - 1, q));
      }
    }
  }
}

TEST_CASE("dictionary save and load roundtrip") {
  auto dir = pvcm::testing::scratch_dir("dict_io");
  const auto preset = diffusion_phantom(8);
  const auto d = preset.dictionary();
  const auto sidecar = save_dictionary(d, dir, "k");
  const auto back = load_dictionary(sidecar);
  CHECK(back.entries() == d.entries());
  CHECK(back.schedule().kernel == Kernel::diffusion_t2);
  CHECK(back.schedule().entries == d.schedule().entries);
  CHECK(back.grid().points() == d.grid().points());
  CHECK(back.grid().weights() == d.grid().weights());

  const auto e = Dictionary::from_matrix(Eigen::MatrixXd::Identity(3, 3));
  const auto back_e = load_dictionary(save_dictionary(e, dir, "eye"));
  CHECK(back_e.entries() == e.entries());
  CHECK(back_e.schedule().kernel == Kernel::explicit_matrix);
  CHECK_THROWS_AS(load_dictionary(dir / "missing.json"), Error);
}

TEST_CASE("truncate_dictionary examples") {
  Gen gen(21);
  SUBCASE("rank one") {
    const Eigen::MatrixXd k = gen.vector(5) * gen.vector(7).transpose();
    CHECK(truncate_dictionary(Dictionary::from_matrix(k), 0.3).rank() == 1);
    CHECK(truncate_dictionary(Dictionary::from_matrix(k), 1e-12).rank() == 1);
  }
  SUBCASE("identity") {
    const auto lrd = truncate_dictionary(Dictionary::from_matrix(Eigen::MatrixXd::Identity(6, 6)), 1e-12);
    CHECK(lrd.rank() == 6);
  }
  SUBCASE("prescribed singular values (10, 1, 1e-9, ...)") {
    Eigen::VectorXd s(8);
    s << 10, 1, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13, 1e-14;
    const Eigen::MatrixXd k = with_singular_values(gen, 8, 12, s);
    // full-SVD oracle: smallest r with tail/total < tol
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(k);
    const Eigen::VectorXd sv = svd.singularValues();
    int r_oracle = 0;
    for (int r = 1; r <= sv.size(); ++r) {
      if (sv.tail(sv.size() - r).norm() / sv.norm() < 1e-4) {
        r_oracle = r;
        break;
      }
    }
    CHECK(r_oracle == 2);
    CHECK(truncate_dictionary(Dictionary::from_matrix(k), 1e-4).rank() == 2);
  }
  SUBCASE("all-zero dictionary") {
    CHECK_THROWS_AS(truncate_dictionary(Dictionary::from_matrix(Eigen::MatrixXd::Zero(3, 4))),
                    InvalidArgument);
  }
  SUBCASE("tolerance range") {
    const auto d = Dictionary::from_matrix(Eigen::MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(truncate_dictionary(d, 0.0), InvalidArgument);
    CHECK_THROWS_AS(truncate_dictionary(d, 1.0), InvalidArgument);
  }
}

TEST_CASE("truncation properties") {
  Gen gen(99);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index p = gen.integer(2, 10), q = gen.integer(2, 14);
    Eigen::VectorXd s(std::min(p, q));
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::pow(10.0, -gen.uniform(0, 8));
    std::sort(s.data(), s.data() + s.size(), std::greater<>());
    const auto dict = Dictionary::from_matrix(with_singular_values(gen, p, q, s));
    Eigen::Index last_rank = std::numeric_limits<Eigen::Index>::max();
    for (double tol : {1e-9, 1e-6, 1e-4, 1e-2, 0.3}) {
      const auto lrd = truncate_dictionary(dict, tol);
      const double err = (dict.entries() - lrd.reconstruct()).norm() / dict.entries().norm();
      CHECK(err < tol);
      CHECK(lrd.frobenius_error() < tol);
      CHECK(lrd.rank() <= last_rank);
      last_rank = lrd.rank();
      const Eigen::MatrixXd vtv = lrd.right_vectors().transpose() * lrd.right_vectors();
      const Eigen::MatrixXd utu = lrd.left_vectors().transpose() * lrd.left_vectors();
      CHECK((vtv - Eigen::MatrixXd::Identity(lrd.rank(), lrd.rank())).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((utu - Eigen::MatrixXd::Identity(lrd.rank(), lrd.rank())).cwiseAbs().maxCoeff() < 1e-10);
      for (Eigen::Index i = 1; i < lrd.rank(); ++i)
        CHECK(lrd.singular_values()(i) <= lrd.singular_values()(i - 1));
      CHECK((lrd.singular_values().array() > 0).all());
    }
  }
}

TEST_CASE("apply_regularized_inverse examples") {
  const LowRankDictionary empty(Eigen::VectorXd(0), Eigen::MatrixXd(3, 0), Eigen::MatrixXd(4, 0), 0.0);
  Eigen::VectorXd x(4);
  x << 1, -2, 3, 0.5;
  CHECK(rel_diff(apply_regularized_inverse(empty, 2.0, x), x / 2) == 0.0);

  const auto one = truncate_dictionary(Dictionary::from_matrix(Eigen::MatrixXd::Ones(1, 1)));
  Eigen::VectorXd v(1);
  v << 1.0;
  CHECK(apply_regularized_inverse(one, 1.0, v)(0) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(apply_regularized_inverse(one, 0.0, v), InvalidArgument);
  CHECK_THROWS_AS(apply_regularized_inverse(one, 1.0, x), InvalidArgument);
}

TEST_CASE("regularized inverse matches a dense solve at full rank") {
  Gen gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index p = gen.integer(1, 8), q = gen.integer(1, 8);
    const Eigen::MatrixXd k = gen.matrix(p, q);
    const auto lrd = truncate_dictionary(Dictionary::from_matrix(k), 1e-15);
    const double beta = std::pow(10.0, gen.uniform(-2, 2));
    const Eigen::VectorXd x = gen.vector(q);
    Eigen::MatrixXd a = k.transpose() * k;
    a.diagonal().array() += beta;
    const Eigen::VectorXd oracle = a.llt().solve(x);
    CHECK(rel_diff(apply_regularized_inverse(lrd, beta, x), oracle) < 1e-10);

    const Eigen::MatrixXd xs = gen.matrix(q, gen.integer(1, 70));
    const Eigen::MatrixXd dense_oracle = a.llt().solve(xs);
    CHECK(rel_diff(RegularizedInverse::low_rank(lrd, beta).apply(xs), dense_oracle) < 1e-10);
    CHECK(rel_diff(RegularizedInverse::dense(Dictionary::from_matrix(k), beta).apply(xs),
                   dense_oracle) < 1e-10);
  }
}

TEST_CASE("regularized inverse is linear") {
  Gen gen(6);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::MatrixXd k = gen.matrix(gen.integer(1, 6), 9);
    const auto lrd = truncate_dictionary(Dictionary::from_matrix(k));
    const double beta = gen.uniform(0.1, 3.0), alpha = gen.normal();
    const Eigen::VectorXd x = gen.vector(9), y = gen.vector(9);
    const Eigen::VectorXd lhs = apply_regularized_inverse(lrd, beta, alpha * x + y);
    const Eigen::VectorXd rhs =
        alpha * apply_regularized_inverse(lrd, beta, x) + apply_regularized_inverse(lrd, beta, y);
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("LowRankDictionary validates its factors") {
  Eigen::VectorXd s(2);
  s << 1.0, 2.0;
  CHECK_THROWS_AS(LowRankDictionary(s, Eigen::MatrixXd::Identity(3, 2), Eigen::MatrixXd::Identity(3, 2), 0.0),
                  InvalidArgument);
  s << 2.0, 1.0;
  CHECK_THROWS_AS(LowRankDictionary(s, 2.0 * Eigen::MatrixXd::Identity(3, 2), Eigen::MatrixXd::Identity(3, 2), 0.0),
                  InvalidArgument);
  CHECK_NOTHROW(LowRankDictionary(s, Eigen::MatrixXd::Identity(3, 2), Eigen::MatrixXd::Identity(4, 2), 0.0));
}
