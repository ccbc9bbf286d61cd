#include <cmath>
#include <limits>
#include <vector>

#include "pvcm/error.hpp"
#include "pvcm/parallel.hpp"
#include "pvcm/solvers.hpp"

namespace pvcm {

namespace {

// Least squares restricted to the passive columns; other entries are zero.
Eigen::VectorXd passive_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                              const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
  }
  Eigen::VectorXd s = Eigen::VectorXd::Zero(a.cols());
  if (cols.empty()) return s;
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = a.col(cols[i]);
  const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(b);
  for (std::size_t i = 0; i < cols.size(); ++i) s(cols[i]) = sol(static_cast<Eigen::Index>(i));
  return s;
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() != b.size()) throw InvalidArgument("nnls: A and b disagree on the row count");
  if (!a.allFinite() || !b.allFinite()) throw InvalidArgument("nnls: inputs must be finite");
  const Eigen::Index n = a.cols();
  NnlsResult out;
  out.x = Eigen::VectorXd::Zero(n);
  if (n == 0) return out;

  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.norm() *
                     std::max(b.norm(), 1.0);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Eigen::VectorXd& x = out.x;
  Eigen::VectorXd w = a.transpose() * (b - a * x);
  const int max_outer = 30 * static_cast<int>(n) + 30;

  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::Index j = -1;
    double best = tol;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!passive[static_cast<std::size_t>(i)] && w(i) > best) {
        best = w(i);
        j = i;
      }
    }
    if (j < 0) return out;
    ++out.iterations;

    passive[static_cast<std::size_t>(j)] = true;
    Eigen::VectorXd s = passive_solve(a, b, passive);
    if (s(j) <= 0.0) {
      // Rounding made the entering variable useless; skip it this round.
      passive[static_cast<std::size_t>(j)] = false;
      w(j) = 0.0;
      continue;
    }

    for (int inner = 0; inner <= n; ++inner) {
      double alpha = std::numeric_limits<double>::infinity();
      Eigen::Index blocking = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)] && s(i) <= 0.0) {
          const double t = x(i) / (x(i) - s(i));
          if (t < alpha) {
            alpha = t;
            blocking = i;
          }
        }
      }
      if (blocking < 0) break;
      x += alpha * (s - x);
      x(blocking) = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)] && x(i) <= 0.0) {
          passive[static_cast<std::size_t>(i)] = false;
          x(i) = 0.0;
        }
      }
      s = passive_solve(a, b, passive);
    }
    x = s;
    w = a.transpose() * (b - a * x);
  }
  throw ConvergenceError("nnls: active-set iteration limit reached");
}

KktReport nnls_kkt(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                   double tikhonov) {
  if (a.rows() != b.size() || a.cols() != x.size()) throw InvalidArgument("nnls_kkt: shape mismatch");
  const Eigen::VectorXd grad = a.transpose() * (a * x - b) + tikhonov * x;
  const double scale = std::max(1.0, (a.transpose() * b).lpNorm<Eigen::Infinity>());
  KktReport report;
  report.min_value = x.size() > 0 ? x.minCoeff() : 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) > 0.0) {
      report.stationarity = std::max(report.stationarity, std::abs(grad(i)) / scale);
    } else {
      report.dual_infeasibility = std::max(report.dual_infeasibility, -grad(i));
    }
  }
  return report;
}

SpectroscopicImage solve_nnls_voxelwise(const Dictionary& dict, const MeasuredStack& data,
                                        double tikhonov, int threads) {
  if (data.measurements() != dict.measurements()) {
    throw InvalidArgument("data and dictionary disagree on P");
  }
  if (!(tikhonov >= 0.0) || !std::isfinite(tikhonov)) {
    throw InvalidArgument("tikhonov weight must be finite and nonnegative");
  }
  if (threads < 1) throw InvalidArgument("threads must be at least 1");
  const Eigen::Index p = dict.measurements();
  const Eigen::Index q = dict.spectral_size();
  const Eigen::Index n = data.voxels();

  Eigen::MatrixXd a = dict.entries();
  if (tikhonov > 0.0) {
    a.conservativeResize(p + q, q);
    a.bottomRows(q) = std::sqrt(tikhonov) * Eigen::MatrixXd::Identity(q, q);
  }
  SpectroscopicImage out{Eigen::MatrixXd::Zero(q, n)};
  WorkerPool pool(threads);
  pool.run(block_count(n), [&](Eigen::Index blk) {
    const auto r = block_range(blk, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a.rows());
    for (Eigen::Index v = r.begin; v < r.begin + r.size; ++v) {
      rhs.head(p) = data.values().col(v);
      out.values.col(v) = nnls(a, rhs).x;
    }
  });
  return out;
}

}  // namespace pvcm
