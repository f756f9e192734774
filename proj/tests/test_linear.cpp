#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "hpm/models/linear.hpp"
#include "hpm/rng.hpp"

namespace {

std::vector<std::string> col_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

// Reference OLS oracle: normal equations solved by Gauss-Jordan elimination
// with partial pivoting. Valid for well-conditioned full-rank designs only.
std::vector<double> normal_equations_oracle(const std::vector<double>& x, const std::vector<double>& y, std::size_t n,
                                            std::size_t p) {
  const std::size_t d = p + 1;
  std::vector<double> ata(d * d, 0.0), aty(d, 0.0);
  auto a = [&](std::size_t i, std::size_t j) -> double { return j == 0 ? 1.0 : x[i * p + (j - 1)]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < d; ++r) {
      aty[r] += a(i, r) * y[i];
      for (std::size_t c = 0; c < d; ++c) ata[r * d + c] += a(i, r) * a(i, c);
    }
  }
  // Gauss-Jordan with partial pivoting on [ata | aty].
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::abs(ata[r * d + col]) > std::abs(ata[piv * d + col])) piv = r;
    if (piv != col) {
      for (std::size_t c = 0; c < d; ++c) std::swap(ata[col * d + c], ata[piv * d + c]);
      std::swap(aty[col], aty[piv]);
    }
    const double diag = ata[col * d + col];
    for (std::size_t c = 0; c < d; ++c) ata[col * d + c] /= diag;
    aty[col] /= diag;
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = ata[r * d + col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) ata[r * d + c] -= f * ata[col * d + c];
      aty[r] -= f * aty[col];
    }
  }
  return aty;  // [intercept, beta...]
}

struct Problem {
  std::vector<double> x, y;
  std::size_t n, p;
};

Problem random_problem(std::size_t n, std::size_t p, std::uint64_t seed, double noise = 0.1) {
  hpm::Rng rng(seed);
  Problem pr;
  pr.n = n;
  pr.p = p;
  pr.x.resize(n * p);
  for (auto& v : pr.x) v = rng.normal();
  std::vector<double> beta(p);
  for (auto& b : beta) b = rng.normal(0.0, 2.0);
  const double b0 = rng.normal(0.0, 1.0);
  pr.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = b0;
    for (std::size_t j = 0; j < p; ++j) v += beta[j] * pr.x[i * p + j];
    pr.y[i] = v + noise * rng.normal();
  }
  return pr;
}

// Max |gradient violation| of the lasso stationarity conditions on
// standardized data: for active j, g_j + alpha*sign(beta_j) = 0; for inactive
// j, |g_j| <= alpha, where g_j = -(1/n) x~_j' (y - yhat).
double lasso_kkt_violation(const std::vector<double>& x, const std::vector<double>& y, std::size_t n, std::size_t p,
                           const hpm::LinearModel& m, double alpha) {
  const hpm::Moments mom = hpm::Moments::compute(x.data(), n, p);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - m.predict(&x[i * p]);
  double worst = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    // Constant columns are pinned at zero and carry no condition.
    bool constant = true;
    for (std::size_t i = 1; i < n && constant; ++i) constant = x[i * p + j] == x[j];
    if (constant) continue;
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i) g += (x[i * p + j] - mom.mean[j]) / mom.scale[j] * resid[i];
    g /= static_cast<double>(n);
    const double bj = m.beta_std[j];
    if (bj != 0.0) worst = std::max(worst, std::abs(g - alpha * (bj > 0 ? 1.0 : -1.0)));
    else worst = std::max(worst, std::max(0.0, std::abs(g) - alpha));
  }
  return worst;
}

// Smallest penalty that zeroes every coefficient: max_j |x~_j' yc| / n.
double lasso_alpha_max(const std::vector<double>& x, const std::vector<double>& y, std::size_t n, std::size_t p) {
  const hpm::Moments mom = hpm::Moments::compute(x.data(), n, p);
  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= static_cast<double>(n);
  double amax = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i) g += (x[i * p + j] - mom.mean[j]) / mom.scale[j] * (y[i] - y_mean);
    amax = std::max(amax, std::abs(g) / static_cast<double>(n));
  }
  return amax;
}

}  // namespace

TEST_CASE("ols matches the normal-equations oracle on random problems") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pr = random_problem(120, 8, seed);
    const auto m = hpm::fit_ols(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p));
    const auto oracle = normal_equations_oracle(pr.x, pr.y, pr.n, pr.p);
    REQUIRE(std::abs(m.intercept - oracle[0]) < 1e-8 * std::max(1.0, std::abs(oracle[0])));
    for (std::size_t j = 0; j < pr.p; ++j)
      REQUIRE(std::abs(m.beta[j] - oracle[j + 1]) < 1e-8 * std::max(1.0, std::abs(oracle[j + 1])));
    REQUIRE(m.aliased.empty());
    REQUIRE(m.rank == static_cast<int>(pr.p + 1));
  }
}

TEST_CASE("ols recovers exact coefficients on noise-free data") {
  const auto pr = random_problem(60, 5, 99, 0.0);
  const auto m = hpm::fit_ols(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p));
  for (std::size_t i = 0; i < pr.n; ++i) REQUIRE(std::abs(m.predict(&pr.x[i * pr.p]) - pr.y[i]) < 1e-9);
}

TEST_CASE("ols flags duplicated columns as aliased and still predicts") {
  hpm::Rng rng(4);
  const std::size_t n = 80, p = 4;
  std::vector<double> x(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    x[i * p + 0] = rng.normal();
    x[i * p + 1] = rng.normal();
    x[i * p + 2] = x[i * p + 0];                      // exact duplicate
    x[i * p + 3] = 2.0 * x[i * p + 1] - x[i * p + 0];  // linear combination
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 + 2.0 * x[i * p + 0] - x[i * p + 1] + 0.01 * rng.normal();
  const auto m = hpm::fit_ols(x.data(), y, n, p, col_names(p));
  REQUIRE(m.rank == 3);  // intercept + 2 independent directions... plus itself
  REQUIRE(m.aliased.size() == 2);
  // Min-norm solution still reproduces fitted values of the reduced model.
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - m.predict(&x[i * p]);
    sse += r * r;
  }
  REQUIRE(sse / static_cast<double>(n) < 0.01);
}

TEST_CASE("ols rejects p >= n designs") {
  const auto pr = random_problem(10, 10, 7);
  REQUIRE_THROWS_AS(hpm::fit_ols(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p)), hpm::Error);
  try {
    hpm::fit_ols(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p));
  } catch (const hpm::Error& e) {
    REQUIRE(e.code() == hpm::Errc::data);
  }
}

TEST_CASE("ols rejects mismatched column names") {
  const auto pr = random_problem(20, 3, 8);
  REQUIRE_THROWS_AS(hpm::fit_ols(pr.x.data(), pr.y, pr.n, pr.p, col_names(2)), hpm::Error);
}

TEST_CASE("lasso satisfies its stationarity conditions at several penalties") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto pr = random_problem(150, 12, 100 + seed, 0.3);
    for (double alpha : {1e-3, 1e-2, 1e-1}) {
      const auto m = hpm::fit_lasso(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p), alpha);
      REQUIRE(m.converged);
      REQUIRE(lasso_kkt_violation(pr.x, pr.y, pr.n, pr.p, m, alpha) < 1e-6);
    }
  }
}

TEST_CASE("lasso at zero penalty matches ols on full-rank designs") {
  const auto pr = random_problem(200, 6, 42);
  const auto ols = hpm::fit_ols(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p));
  const auto lasso = hpm::fit_lasso(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p), 0.0);
  REQUIRE(std::abs(lasso.intercept - ols.intercept) < 1e-6 * std::max(1.0, std::abs(ols.intercept)));
  for (std::size_t j = 0; j < pr.p; ++j)
    REQUIRE(std::abs(lasso.beta[j] - ols.beta[j]) < 1e-6 * std::max(1.0, std::abs(ols.beta[j])));
}

TEST_CASE("penalties above the critical value zero every coefficient") {
  const auto pr = random_problem(100, 7, 55);
  const double amax = lasso_alpha_max(pr.x, pr.y, pr.n, pr.p);
  const auto m = hpm::fit_lasso(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p), amax * 1.001);
  for (double b : m.beta_std) REQUIRE(b == 0.0);
  // Intercept falls back to the response mean.
  double y_mean = 0.0;
  for (double v : pr.y) y_mean += v;
  y_mean /= static_cast<double>(pr.n);
  REQUIRE(std::abs(m.intercept - y_mean) < 1e-12 * std::max(1.0, std::abs(y_mean)));
  // Just below the critical value at least one coefficient activates.
  const auto m2 = hpm::fit_lasso(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p), amax * 0.99);
  bool any = false;
  for (double b : m2.beta_std) any = any || b != 0.0;
  REQUIRE(any);
}

TEST_CASE("lasso predictions are invariant to affine rescaling of a column") {
  auto pr = random_problem(120, 5, 77, 0.2);
  const double alpha = 0.05;
  const auto m1 = hpm::fit_lasso(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p), alpha);
  std::vector<double> pred1(pr.n);
  for (std::size_t i = 0; i < pr.n; ++i) pred1[i] = m1.predict(&pr.x[i * pr.p]);

  // Rescale and shift column 2: standardization must absorb it.
  auto x2 = pr.x;
  for (std::size_t i = 0; i < pr.n; ++i) x2[i * pr.p + 2] = 40.0 * x2[i * pr.p + 2] - 300.0;
  const auto m2 = hpm::fit_lasso(x2.data(), pr.y, pr.n, pr.p, col_names(pr.p), alpha);
  for (std::size_t i = 0; i < pr.n; ++i) REQUIRE(std::abs(m2.predict(&x2[i * pr.p]) - pred1[i]) < 1e-6);
  REQUIRE(std::abs(m2.beta_std[2] - m1.beta_std[2]) < 1e-7);
}

TEST_CASE("constant columns stay at zero under lasso") {
  auto pr = random_problem(50, 4, 31);
  for (std::size_t i = 0; i < pr.n; ++i) pr.x[i * pr.p + 1] = 3.5;
  const auto m = hpm::fit_lasso(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p), 0.01);
  REQUIRE(m.beta_std[1] == 0.0);
  REQUIRE(m.beta[1] == 0.0);
}

TEST_CASE("lasso input validation") {
  const auto pr = random_problem(30, 3, 11);
  REQUIRE_THROWS_AS(hpm::fit_lasso(pr.x.data(), pr.y, pr.n, pr.p, col_names(pr.p), -0.1), hpm::Error);
  std::vector<double> y1 = {1.0};
  REQUIRE_THROWS_AS(hpm::fit_lasso(pr.x.data(), y1, 1, pr.p, col_names(pr.p), 0.1), hpm::Error);
}
