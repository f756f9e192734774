#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpm/error.hpp"

namespace hpm {

// Per-column centering/scaling moments. Scale is the population standard
// deviation; constant columns keep scale 1 so they standardize to zero.
struct Moments {
  std::vector<double> mean, scale;

  static Moments compute(const double* x, std::size_t n, std::size_t p) {
    Moments m;
    m.mean.assign(p, 0.0);
    m.scale.assign(p, 1.0);
    if (n == 0) return m;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) m.mean[j] += x[i * p + j];
    for (std::size_t j = 0; j < p; ++j) m.mean[j] /= static_cast<double>(n);
    std::vector<double> ss(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        const double d = x[i * p + j] - m.mean[j];
        ss[j] += d * d;
      }
    for (std::size_t j = 0; j < p; ++j) {
      const double v = ss[j] / static_cast<double>(n);
      m.scale[j] = v > 0.0 ? std::sqrt(v) : 1.0;
    }
    return m;
  }
};

struct LinearModel {
  std::vector<std::string> columns;
  double intercept = 0.0;
  std::vector<double> beta;       // raw (unstandardized) scale
  std::vector<double> beta_std;   // standardized scale (lasso; empty for ols)
  std::string kind = "ols";
  double alpha = 0.0;
  int rank = 0;
  std::vector<std::string> aliased;  // columns judged dependent at the solve
  bool converged = true;
  std::size_t sweeps = 0;

  double predict(const double* row) const {
    double v = intercept;
    for (std::size_t j = 0; j < beta.size(); ++j) v += beta[j] * row[j];
    return v;
  }
};

// Least squares through the normal equations with a rank-revealing complete
// orthogonal decomposition: pinv(A'A) A'y equals the minimum-norm pinv(A) y,
// and the pivot order reports which columns were treated as aliased.
inline LinearModel fit_ols(const double* x, const std::vector<double>& y, std::size_t n, std::size_t p,
                           const std::vector<std::string>& columns) {
  if (columns.size() != p) fail(Errc::usage, "column name count does not match matrix width");
  if (p >= n)
    fail(Errc::data, "ols needs more rows than feature columns: n=" + std::to_string(n) + ", p=" + std::to_string(p) +
                         "; reduce blocks or use lasso regularization");

  using Mat = Eigen::MatrixXd;
  using Vec = Eigen::VectorXd;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(x, n, p);
  Mat A(n, p + 1);
  A.col(0).setOnes();
  A.rightCols(p) = X;
  Vec yv = Eigen::Map<const Vec>(y.data(), static_cast<Eigen::Index>(n));

  Mat G = Mat::Zero(p + 1, p + 1);
  G.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  Vec b = A.transpose() * yv;

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(G);
  Vec beta = cod.solve(b);

  LinearModel m;
  m.kind = "ols";
  m.columns = columns;
  m.intercept = beta(0);
  m.beta.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) m.beta[j] = beta(static_cast<Eigen::Index>(j + 1));
  m.rank = static_cast<int>(cod.rank());
  if (m.rank < static_cast<int>(p + 1)) {
    const auto& perm = cod.colsPermutation().indices();
    for (Eigen::Index k = cod.rank(); k < perm.size(); ++k) {
      const Eigen::Index col = perm(k);
      m.aliased.push_back(col == 0 ? std::string("(intercept)") : columns[static_cast<std::size_t>(col - 1)]);
    }
  }
  return m;
}

// Lasso objective: (1/2n)||y - b0 - X beta||^2 + alpha * ||beta||_1 on
// standardized columns with an unpenalized intercept. Covariance-mode cyclic
// coordinate descent; standardization gives K = X~'X~/n a unit diagonal, so
// each update is a plain soft-threshold. Constant columns stay at zero.
inline LinearModel fit_lasso(const double* x, const std::vector<double>& y, std::size_t n, std::size_t p,
                             const std::vector<std::string>& columns, double alpha, std::size_t max_sweeps = 10000,
                             double tol = 1e-7) {
  if (columns.size() != p) fail(Errc::usage, "column name count does not match matrix width");
  if (alpha < 0.0) fail(Errc::usage, "lasso penalty must be nonnegative");
  if (n < 2) fail(Errc::data, "lasso needs at least two rows");

  using Mat = Eigen::MatrixXd;
  using Vec = Eigen::VectorXd;
  const Moments mom = Moments::compute(x, n, p);
  Mat Xs(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) Xs(i, j) = (x[i * p + j] - mom.mean[j]) / mom.scale[j];
  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= static_cast<double>(n);
  Vec yc(n);
  for (std::size_t i = 0; i < n; ++i) yc(i) = y[i] - y_mean;

  const double inv_n = 1.0 / static_cast<double>(n);
  Mat K = Mat::Zero(p, p);
  K.selfadjointView<Eigen::Lower>().rankUpdate(Xs.transpose(), inv_n);
  K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  Vec c = Xs.transpose() * yc * inv_n;

  Vec beta = Vec::Zero(p);
  Vec kbeta = Vec::Zero(p);  // K * beta, maintained incrementally
  bool converged = false;
  std::size_t sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double kjj = K(j, j);
      if (kjj <= 0.0) continue;  // constant column
      const double rho = c(j) - kbeta(j) + kjj * beta(j);
      double bj = 0.0;
      if (rho > alpha) bj = (rho - alpha) / kjj;
      else if (rho < -alpha) bj = (rho + alpha) / kjj;
      const double delta = bj - beta(j);
      if (delta != 0.0) {
        kbeta += K.col(j) * delta;
        beta(j) = bj;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tol) {
      converged = true;
      ++sweep;
      break;
    }
  }

  LinearModel m;
  m.kind = "lasso";
  m.alpha = alpha;
  m.columns = columns;
  m.converged = converged;
  m.sweeps = sweep;
  m.beta_std.assign(p, 0.0);
  m.beta.assign(p, 0.0);
  m.intercept = y_mean;
  for (std::size_t j = 0; j < p; ++j) {
    m.beta_std[j] = beta(static_cast<Eigen::Index>(j));
    m.beta[j] = m.beta_std[j] / mom.scale[j];
    m.intercept -= m.beta[j] * mom.mean[j];
  }
  m.rank = static_cast<int>(p);
  return m;
}

}  // namespace hpm
