#pragma once

#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "hpm/binio.hpp"
#include "hpm/error.hpp"
#include "hpm/models/tree.hpp"
#include "hpm/rng.hpp"

namespace hpm {

struct EnsembleParams {
  int num_trees = 100;
  TreeParams tree;
  double learning_rate = 0.1;  // gbt only
  std::uint64_t seed = 0;
};

// Random forest: mean of bootstrap trees. Gradient boosting: base mean plus
// learning_rate times the sum of stage trees fit to running residuals.
// Tree i always draws from Rng(derive_seed(seed, i)), so stages/trees can be
// reproduced or continued independently of how many came before.
struct Ensemble {
  std::string kind = "rf";  // rf | gbt
  double base = 0.0;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  TreeParams tree_params;
  std::vector<RegressionTree> trees;
  std::vector<double> train_mse;  // gbt: after each stage

  double predict(const double* row) const {
    if (kind == "rf") {
      double s = 0.0;
      for (const auto& t : trees) s += t.predict(row);
      return trees.empty() ? 0.0 : s / static_cast<double>(trees.size());
    }
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(row);
    return base + learning_rate * s;
  }

  static constexpr char kMagic[9] = "HPMENSBL";
  static constexpr std::uint32_t kVersion = 1;

  void save(const std::string& path) const {
    using namespace binio;
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "cannot open model snapshot for writing: " + path);
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    out.put(kind == "rf" ? 0 : 1);
    put_f64(out, base);
    put_f64(out, learning_rate);
    put_u64(out, seed);
    put_i32(out, tree_params.max_depth);
    const std::uint8_t mtry = tree_params.mtry == "all" ? 0 : tree_params.mtry == "sqrt" ? 1 : 2;
    out.put(static_cast<char>(mtry));
    put_u32(out, static_cast<std::uint32_t>(trees.size()));
    for (const auto& t : trees) {
      put_u32(out, static_cast<std::uint32_t>(t.nodes.size()));
      for (const auto& n : t.nodes) {
        put_i32(out, n.feature);
        put_f64(out, n.threshold);
        put_f64(out, n.value);
        put_i32(out, n.left);
        put_i32(out, n.right);
      }
    }
    put_u32(out, static_cast<std::uint32_t>(train_mse.size()));
    for (double v : train_mse) put_f64(out, v);
    if (!out) fail(Errc::io, "short write to model snapshot: " + path);
  }

  static Ensemble load(const std::string& path) {
    using namespace binio;
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "missing model snapshot: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) fail(Errc::schema, "bad model snapshot magic: " + path);
    if (get_u32(in) != kVersion) fail(Errc::schema, "unsupported model snapshot version: " + path);
    Ensemble e;
    e.kind = in.get() == 0 ? "rf" : "gbt";
    e.base = get_f64(in);
    e.learning_rate = get_f64(in);
    e.seed = get_u64(in);
    e.tree_params.max_depth = get_i32(in);
    const int mtry = in.get();
    e.tree_params.mtry = mtry == 0 ? "all" : mtry == 1 ? "sqrt" : "log";
    e.trees.resize(get_u32(in));
    for (auto& t : e.trees) {
      t.nodes.resize(get_u32(in));
      for (auto& n : t.nodes) {
        n.feature = get_i32(in);
        n.threshold = get_f64(in);
        n.value = get_f64(in);
        n.left = get_i32(in);
        n.right = get_i32(in);
      }
    }
    e.train_mse.resize(get_u32(in));
    for (auto& v : e.train_mse) v = get_f64(in);
    if (!in) fail(Errc::schema, "truncated model snapshot: " + path);
    return e;
  }
};

inline void validate_ensemble_params(const EnsembleParams& p) {
  if (p.num_trees < 1) fail(Errc::usage, "ensemble needs at least one tree");
  if (p.tree.max_depth < -1) fail(Errc::usage, "max_depth must be -1 (unlimited) or >= 0");
  if (p.learning_rate <= 0.0) fail(Errc::usage, "learning_rate must be positive");
  mtry_count(p.tree.mtry, 1);  // validates the rule name
}

inline Ensemble fit_random_forest(const double* x, std::size_t p, const std::vector<double>& y,
                                  const EnsembleParams& params) {
  validate_ensemble_params(params);
  const std::size_t n = y.size();
  if (n == 0) fail(Errc::data, "cannot fit a forest on an empty sample");
  Ensemble e;
  e.kind = "rf";
  e.seed = params.seed;
  e.learning_rate = 0.0;
  e.tree_params = params.tree;
  std::vector<std::uint32_t> sample(n);
  for (int i = 0; i < params.num_trees; ++i) {
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(i)));
    for (auto& s : sample) s = static_cast<std::uint32_t>(rng.uniform_int(n));
    e.trees.push_back(fit_tree(x, p, y, sample, params.tree, rng));
  }
  return e;
}

namespace detail {

// Residual updates run in stage order so a continued fit replays the exact
// floating-point sequence of a from-scratch fit.
inline void gbt_stages(Ensemble& e, const double* x, std::size_t p, const std::vector<double>& y,
                       std::vector<double>& resid, int extra_stages) {
  const std::size_t n = y.size();
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  for (int k = 0; k < extra_stages; ++k) {
    const std::uint64_t stage = e.trees.size();
    Rng rng(derive_seed(e.seed, stage));
    RegressionTree t = fit_tree(x, p, resid, all, e.tree_params, rng);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] -= e.learning_rate * t.predict(x + i * p);
      sse += resid[i] * resid[i];
    }
    e.trees.push_back(std::move(t));
    e.train_mse.push_back(sse / static_cast<double>(n));
  }
}

}  // namespace detail

inline Ensemble fit_gbt(const double* x, std::size_t p, const std::vector<double>& y, const EnsembleParams& params) {
  validate_ensemble_params(params);
  const std::size_t n = y.size();
  if (n == 0) fail(Errc::data, "cannot fit gbt on an empty sample");
  Ensemble e;
  e.kind = "gbt";
  e.seed = params.seed;
  e.learning_rate = params.learning_rate;
  e.tree_params = params.tree;
  double mean = 0.0;
  for (double v : y) mean += v;
  e.base = mean / static_cast<double>(n);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - e.base;
  detail::gbt_stages(e, x, p, y, resid, params.num_trees);
  return e;
}

// Warm start: adds stages to an existing gbt fit; bit-exact with fitting all
// stages at once because residuals are rebuilt by replaying every stage.
inline void continue_gbt(Ensemble& e, const double* x, std::size_t p, const std::vector<double>& y,
                         int extra_stages) {
  if (e.kind != "gbt") fail(Errc::usage, "warm start applies to gbt models only");
  const std::size_t n = y.size();
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - e.base;
  for (const auto& t : e.trees)
    for (std::size_t i = 0; i < n; ++i) resid[i] -= e.learning_rate * t.predict(x + i * p);
  detail::gbt_stages(e, x, p, y, resid, extra_stages);
}

}  // namespace hpm
