#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "hpm/selection.hpp"
#include "hpm/rng.hpp"

using hpm::FeatureMatrix;

namespace {

// Two-block random design; y = x beta + sigma noise.
FeatureMatrix random_matrix(std::size_t n, std::size_t p, std::uint64_t seed, const std::vector<double>& beta,
                            double sigma) {
  hpm::Rng rng(seed);
  FeatureMatrix fm;
  fm.n = n;
  for (std::size_t j = 0; j < p; ++j) fm.schema.columns.push_back("c" + std::to_string(j));
  const std::size_t p1 = p / 2;
  fm.schema.blocks.push_back({"hc", 0, p1});
  fm.schema.blocks.push_back({"311", p1, p - p1});
  fm.x.resize(n * p);
  for (auto& v : fm.x) v = rng.normal();
  fm.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.5;
    for (std::size_t j = 0; j < p; ++j) v += beta[j] * fm.x[i * p + j];
    fm.y[i] = v + sigma * rng.normal();
  }
  return fm;
}

// Penalty above which every standardized coefficient is zero.
double alpha_bound(const FeatureMatrix& fm) {
  const std::size_t n = fm.n, p = fm.schema.columns.size();
  const double ym = hpm::mean_of(fm.y);
  double best = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) mean += fm.x[i * p + j];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = fm.x[i * p + j] - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(n));
    if (sd <= 0) continue;
    double dot = 0;
    for (std::size_t i = 0; i < n; ++i) dot += (fm.x[i * p + j] - mean) / sd * (fm.y[i] - ym);
    best = std::max(best, std::abs(dot) / static_cast<double>(n));
  }
  return best;
}

}  // namespace

TEST_CASE("kept and dropped partition the schema columns") {
  std::vector<double> beta = {2.0, 0.0, -1.5, 0.0, 0.8, 0.0, 0.0, -0.3};
  const auto fm = random_matrix(200, 8, 1, beta, 0.5);
  for (double alpha : {1e-4, 1e-2, 0.3, 5.0}) {
    const auto sel = hpm::select_features(fm, alpha);
    REQUIRE(sel.alpha == alpha);
    REQUIRE(sel.kept.size() + sel.dropped.size() == fm.schema.columns.size());
    std::set<std::string> all(sel.kept.begin(), sel.kept.end());
    all.insert(sel.dropped.begin(), sel.dropped.end());
    REQUIRE(all == std::set<std::string>(fm.schema.columns.begin(), fm.schema.columns.end()));
    std::size_t by_block = 0;
    for (const auto& [name, count] : sel.kept_by_block) by_block += count;
    REQUIRE(by_block == sel.kept.size());
    REQUIRE(sel.kept_by_block.count("hc") == 1);
    REQUIRE(sel.kept_by_block.count("311") == 1);
  }
}

TEST_CASE("selection replays the lasso coefficient threshold") {
  std::vector<double> beta = {1.0, -2.0, 0.0, 0.4, 0.0, 0.0};
  const auto fm = random_matrix(150, 6, 2, beta, 0.3);
  const double alpha = 0.05;
  const auto sel = hpm::select_features(fm, alpha);
  const auto model = hpm::fit_lasso(fm.x.data(), fm.y, fm.n, 6, fm.schema.columns, alpha);
  REQUIRE(sel.converged == model.converged);
  std::vector<std::string> expect_kept;
  for (std::size_t j = 0; j < 6; ++j)
    if (std::abs(model.beta_std[j]) > hpm::kSelectionTolerance) expect_kept.push_back(fm.schema.columns[j]);
  REQUIRE(sel.kept == expect_kept);
}

TEST_CASE("a vanishing penalty keeps every informative column") {
  std::vector<double> beta = {2.0, -1.0, 0.7, 1.2, -0.5, 0.9, 1.5, -2.2};
  const auto fm = random_matrix(400, 8, 3, beta, 0.2);
  const auto sel = hpm::select_features(fm, 1e-8);
  REQUIRE(sel.kept.size() == 8);
  REQUIRE(sel.dropped.empty());
}

TEST_CASE("a penalty above the data bound keeps nothing") {
  std::vector<double> beta = {2.0, -1.0, 0.7, 1.2, -0.5, 0.9};
  const auto fm = random_matrix(250, 6, 4, beta, 0.4);
  const double bound = alpha_bound(fm);
  const auto none = hpm::select_features(fm, bound * 1.001);
  REQUIRE(none.kept.empty());
  REQUIRE(none.dropped.size() == 6);
  REQUIRE(none.converged);
  // Just inside the bound at least one column is active.
  const auto some = hpm::select_features(fm, bound * 0.98);
  REQUIRE(!some.kept.empty());
}

TEST_CASE("a sparse signal survives screening while noise columns fall away") {
  // Two real columns among ten pure-noise ones.
  std::vector<double> beta(12, 0.0);
  beta[0] = 3.0;
  beta[3] = -2.0;
  const auto fm = random_matrix(400, 12, 5, beta, 0.1);
  const auto sel = hpm::select_features(fm, 0.5);
  std::set<std::string> kept(sel.kept.begin(), sel.kept.end());
  REQUIRE(kept.count("c0") == 1);
  REQUIRE(kept.count("c3") == 1);
  REQUIRE(sel.kept.size() <= 4);
}

TEST_CASE("kept counts fall as the penalty grows, statistically") {
  std::size_t monotone = 0;
  const auto alphas = hpm::parse_alpha_grid("1e-4:1e1:0.5dex");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    hpm::Rng rng(hpm::derive_seed(77, seed));
    std::vector<double> beta(8);
    for (auto& b : beta) b = rng.normal();
    const auto fm = random_matrix(150, 8, hpm::derive_seed(78, seed), beta, 0.5);
    const auto curve = hpm::selection_curve(fm, alphas);
    REQUIRE(curve.size() == alphas.size());
    bool ok = true;
    for (std::size_t i = 1; i < curve.size(); ++i)
      if (curve[i].kept.size() > curve[i - 1].kept.size()) ok = false;
    if (ok) ++monotone;
    // The grid spans the bound, so the tail keeps nothing.
    REQUIRE(curve.back().kept.empty());
  }
  REQUIRE(monotone >= 9);
}

TEST_CASE("alpha grid parsing") {
  const auto grid = hpm::parse_alpha_grid("1e-6:1e-1:0.5dex");
  REQUIRE(grid.size() == 11);
  REQUIRE(grid.front() == Catch::Approx(1e-6).epsilon(1e-12));
  REQUIRE(grid.back() == Catch::Approx(1e-1).epsilon(1e-12));
  for (std::size_t i = 1; i < grid.size(); ++i)
    REQUIRE(grid[i] / grid[i - 1] == Catch::Approx(std::pow(10.0, 0.5)).epsilon(1e-10));

  const auto single = hpm::parse_alpha_grid("1e-3:1e-3:1dex");
  REQUIRE(single.size() == 1);
  REQUIRE(single[0] == Catch::Approx(1e-3).epsilon(1e-12));

  REQUIRE_THROWS_AS(hpm::parse_alpha_grid("1e-6:1e-1"), hpm::Error);
  REQUIRE_THROWS_AS(hpm::parse_alpha_grid("1e-6:1e-1:0.5"), hpm::Error);
  REQUIRE_THROWS_AS(hpm::parse_alpha_grid("1e-6:1e-1:0.4dex"), hpm::Error);
  REQUIRE_THROWS_AS(hpm::parse_alpha_grid("0:1e-1:0.5dex"), hpm::Error);
  REQUIRE_THROWS_AS(hpm::parse_alpha_grid("1e-1:1e-6:0.5dex"), hpm::Error);
  REQUIRE_THROWS_AS(hpm::parse_alpha_grid("1e-6:1e-1:-0.5dex"), hpm::Error);
  REQUIRE_THROWS_AS(hpm::parse_alpha_grid("abc:1e-1:0.5dex"), hpm::Error);
  REQUIRE_THROWS_AS(hpm::parse_alpha_grid(""), hpm::Error);
}

TEST_CASE("selection outputs mirror the curve") {
  std::vector<double> beta = {1.5, 0.0, -0.8, 0.0, 0.6, 0.0};
  const auto fm = random_matrix(200, 6, 6, beta, 0.4);
  const std::vector<double> alphas = {1e-3, 1e-1, 10.0};
  const auto curve = hpm::selection_curve(fm, alphas);

  const std::string path = "/tmp/hpm_selection_test.csv";
  hpm::write_selection_csv(path, curve, fm.schema);
  hpm::CsvReader r(path);
  REQUIRE(r.header() ==
          std::vector<std::string>{"alpha", "kept", "dropped", "converged", "kept_hc", "kept_311"});
  std::vector<std::string> f;
  std::size_t row = 0;
  while (r.next(f)) {
    REQUIRE(hpm::require_double(f[0], "alpha") == alphas[row]);
    REQUIRE(hpm::require_int(f[1], "kept") == static_cast<long long>(curve[row].kept.size()));
    REQUIRE(hpm::require_int(f[2], "dropped") == static_cast<long long>(curve[row].dropped.size()));
    REQUIRE(hpm::require_int(f[4], "kept_hc") == static_cast<long long>(curve[row].kept_by_block.at("hc")));
    ++row;
  }
  REQUIRE(row == 3);
  std::remove(path.c_str());

  const auto j = hpm::selection_curve_json(curve);
  REQUIRE(j.at("schema_version") == 1);
  REQUIRE(j.at("curve").size() == 3);
  REQUIRE(j.at("curve")[0].at("alpha") == 1e-3);
  REQUIRE(j.at("curve")[0].at("n_kept").get<std::size_t>() == curve[0].kept.size());
  REQUIRE(j.at("curve")[0].at("kept_by_block").at("hc").get<std::size_t>() == curve[0].kept_by_block.at("hc"));
  REQUIRE(j.at("curve")[0].at("converged").get<bool>() == curve[0].converged);
}
