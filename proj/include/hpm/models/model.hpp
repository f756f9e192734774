#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpm/error.hpp"
#include "hpm/features.hpp"
#include "hpm/hash.hpp"
#include "hpm/models/design.hpp"
#include "hpm/models/ensemble.hpp"
#include "hpm/models/linear.hpp"
#include "hpm/models/metrics.hpp"
#include "hpm/models/tree.hpp"

namespace hpm {

// Threshold on standardized coefficients separating "kept" from "dropped";
// coordinate descent produces exact zeros, this only guards numerical dust.
inline constexpr double kSelectionTolerance = 1e-12;

struct ModelSpec {
  std::string kind = "ols";  // ols | lasso | rf | gbt
  double alpha = 0.0;
  std::optional<double> select_alpha;  // lasso selection pass before the main fit
  std::vector<std::string> factors;
  int num_trees = 100;
  int max_depth = -1;
  std::string mtry = "all";
  double learning_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (kind != "ols" && kind != "lasso" && kind != "rf" && kind != "gbt")
      fail(Errc::usage, "unknown model kind '" + kind + "'");
    validate_factors(factors);
    if (kind == "lasso" && alpha < 0.0) fail(Errc::usage, "lasso penalty must be nonnegative");
    if (select_alpha && *select_alpha <= 0.0) fail(Errc::usage, "select_alpha must be positive");
    if (kind == "rf" || kind == "gbt") {
      EnsembleParams p;
      p.num_trees = num_trees;
      p.tree.max_depth = max_depth;
      p.tree.mtry = mtry;
      p.learning_rate = kind == "gbt" ? learning_rate : 0.1;
      validate_ensemble_params(p);
    }
  }

  static ModelSpec from_json(const json& j) {
    ModelSpec s;
    s.kind = j.value("kind", s.kind);
    s.alpha = j.value("alpha", s.alpha);
    if (j.contains("select_alpha") && !j["select_alpha"].is_null()) s.select_alpha = j["select_alpha"].get<double>();
    if (j.contains("factors")) s.factors = j["factors"].get<std::vector<std::string>>();
    s.num_trees = j.value("num_trees", s.num_trees);
    s.max_depth = j.value("max_depth", s.max_depth);
    s.mtry = j.value("mtry", s.mtry);
    s.learning_rate = j.value("learning_rate", s.learning_rate);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
  }

  json to_json() const {
    json j{{"kind", kind}, {"seed", seed}};
    if (kind == "lasso") j["alpha"] = alpha;
    if (select_alpha) j["select_alpha"] = *select_alpha;
    if (!factors.empty()) j["factors"] = factors;
    if (kind == "rf" || kind == "gbt") {
      j["num_trees"] = num_trees;
      j["max_depth"] = max_depth;
      j["mtry"] = mtry;
      if (kind == "gbt") j["learning_rate"] = learning_rate;
    }
    return j;
  }

  // Short human label used as a report row.
  std::string descriptor() const {
    char buf[160];
    std::string d = kind;
    if (kind == "lasso") {
      std::snprintf(buf, sizeof buf, "lasso(alpha=%g)", alpha);
      d = buf;
    } else if (kind == "rf" || kind == "gbt") {
      std::string depth = max_depth < 0 ? "all" : std::to_string(max_depth);
      if (kind == "gbt")
        std::snprintf(buf, sizeof buf, "gbt(trees=%d,depth=%s,mtry=%s,lr=%g)", num_trees, depth.c_str(), mtry.c_str(),
                      learning_rate);
      else
        std::snprintf(buf, sizeof buf, "rf(trees=%d,depth=%s,mtry=%s)", num_trees, depth.c_str(), mtry.c_str());
      d = buf;
    }
    for (const auto& f : factors) d += "+" + f;
    if (select_alpha) {
      std::snprintf(buf, sizeof buf, "+sel(alpha=%g)", *select_alpha);
      d += buf;
    }
    return d;
  }
};

// Feature columns plus one-hot factor blocks, with encoders fit on training
// rows only. fill_row reports rows whose factor level was never seen.
struct DesignBuilder {
  std::size_t feature_width = 0;
  std::vector<DummyEncoder> encoders;
  std::vector<std::string> columns;

  static DesignBuilder fit(const FeatureMatrix& fm, const std::vector<std::string>& factors,
                           const std::vector<std::size_t>& train_rows) {
    DesignBuilder b;
    b.feature_width = fm.schema.width();
    b.columns = fm.schema.columns;
    for (const auto& f : factors) {
      std::vector<std::string> values(fm.n);
      for (std::size_t i = 0; i < fm.n; ++i) values[i] = factor_value(fm, f, i);
      DummyEncoder e = DummyEncoder::fit(f, values, train_rows);
      for (auto& c : e.column_names()) b.columns.push_back(std::move(c));
      b.encoders.push_back(std::move(e));
    }
    return b;
  }

  std::size_t width() const { return columns.size(); }

  bool fill_row(const FeatureMatrix& fm, std::size_t row, double* out) const {
    const double* src = fm.row(row);
    std::copy(src, src + feature_width, out);
    std::size_t off = feature_width;
    bool ok = true;
    for (const auto& e : encoders) {
      if (!e.encode(factor_value(fm, e.factor, row), out + off)) ok = false;
      off += e.width();
    }
    return ok;
  }
};

struct FittedModel {
  ModelSpec spec;
  DesignBuilder design;
  std::vector<std::size_t> selected;  // design columns used by the main fit; empty = all
  LinearModel linear;
  Ensemble ensemble;
  double train_mean = 0.0;  // for the train-mean R^2 baseline

  bool uses_linear() const { return spec.kind == "ols" || spec.kind == "lasso"; }

  std::optional<double> predict_row(const FeatureMatrix& fm, std::size_t row, std::vector<double>& scratch) const {
    scratch.resize(design.width());
    if (!design.fill_row(fm, row, scratch.data())) return std::nullopt;
    if (selected.empty()) return uses_linear() ? linear.predict(scratch.data()) : ensemble.predict(scratch.data());
    static thread_local std::vector<double> sub;
    sub.resize(selected.size());
    for (std::size_t k = 0; k < selected.size(); ++k) sub[k] = scratch[selected[k]];
    return uses_linear() ? linear.predict(sub.data()) : ensemble.predict(sub.data());
  }
};

inline FittedModel fit_model(const FeatureMatrix& fm, const std::vector<std::size_t>& train_rows,
                             const ModelSpec& spec) {
  spec.validate();
  if (train_rows.empty()) fail(Errc::data, "cannot fit a model on an empty training set");

  FittedModel fitted;
  fitted.spec = spec;
  fitted.design = DesignBuilder::fit(fm, spec.factors, train_rows);
  const std::size_t p = fitted.design.width();
  const std::size_t n = train_rows.size();

  std::vector<double> x(n * p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    fitted.design.fill_row(fm, train_rows[i], x.data() + i * p);
    y[i] = fm.y[train_rows[i]];
  }
  fitted.train_mean = mean_of(y);

  const double* fit_x = x.data();
  std::size_t fit_p = p;
  std::vector<std::string> fit_columns = fitted.design.columns;
  std::vector<double> x_sub;
  if (spec.select_alpha) {
    LinearModel sel = fit_lasso(x.data(), y, n, p, fitted.design.columns, *spec.select_alpha);
    for (std::size_t j = 0; j < p; ++j)
      if (std::abs(sel.beta_std[j]) > kSelectionTolerance) fitted.selected.push_back(j);
    if (fitted.selected.empty()) fail(Errc::data, "selection kept no columns; lower select_alpha");
    fit_p = fitted.selected.size();
    fit_columns.clear();
    for (std::size_t j : fitted.selected) fit_columns.push_back(fitted.design.columns[j]);
    x_sub.resize(n * fit_p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < fit_p; ++k) x_sub[i * fit_p + k] = x[i * p + fitted.selected[k]];
    fit_x = x_sub.data();
  }

  if (spec.kind == "ols") {
    fitted.linear = fit_ols(fit_x, y, n, fit_p, fit_columns);
  } else if (spec.kind == "lasso") {
    fitted.linear = fit_lasso(fit_x, y, n, fit_p, fit_columns, spec.alpha);
  } else {
    EnsembleParams params;
    params.num_trees = spec.num_trees;
    params.tree.max_depth = spec.max_depth;
    params.tree.mtry = spec.mtry;
    params.learning_rate = spec.learning_rate;
    params.seed = spec.seed;
    fitted.ensemble =
        spec.kind == "rf" ? fit_random_forest(fit_x, fit_p, y, params) : fit_gbt(fit_x, fit_p, y, params);
  }
  return fitted;
}

// --- snapshots ---

inline std::string columns_fingerprint(const std::vector<std::string>& columns) {
  std::uint64_t h = kFnvOffset;
  for (const auto& c : columns) {
    h = fnv1a64(c, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return hex64(h);
}

inline json encoders_json(const std::vector<DummyEncoder>& encoders) {
  json arr = json::array();
  for (const auto& e : encoders) arr.push_back(json{{"factor", e.factor}, {"levels", e.levels}});
  return arr;
}

inline std::vector<DummyEncoder> encoders_from_json(const json& arr) {
  std::vector<DummyEncoder> out;
  for (const auto& je : arr) {
    DummyEncoder e;
    e.factor = je.at("factor").get<std::string>();
    e.levels = je.at("levels").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < e.levels.size(); ++i) e.level_index.emplace(e.levels[i], i);
    out.push_back(std::move(e));
  }
  return out;
}

// Linear models snapshot to a JSON document; ensembles to the compact binary
// with a JSON sidecar at <path>.json carrying the design metadata.
inline void save_model(const FittedModel& m, const std::string& path) {
  json meta{{"schema_version", 1},
            {"spec", m.spec.to_json()},
            {"columns", m.design.columns},
            {"feature_width", m.design.feature_width},
            {"encoders", encoders_json(m.design.encoders)},
            {"selected", m.selected},
            {"train_mean", m.train_mean},
            {"schema_fingerprint", columns_fingerprint(m.design.columns)}};
  if (m.uses_linear()) {
    meta["model"] = json{{"kind", m.linear.kind},     {"alpha", m.linear.alpha},     {"intercept", m.linear.intercept},
                         {"beta", m.linear.beta},     {"beta_std", m.linear.beta_std}, {"rank", m.linear.rank},
                         {"aliased", m.linear.aliased}, {"converged", m.linear.converged}, {"sweeps", m.linear.sweeps}};
    std::ofstream out(path);
    if (!out) fail(Errc::io, "cannot write model file: " + path);
    out << meta.dump(2) << "\n";
    return;
  }
  m.ensemble.save(path);
  std::ofstream out(path + ".json");
  if (!out) fail(Errc::io, "cannot write model sidecar: " + path + ".json");
  out << meta.dump(2) << "\n";
}

inline FittedModel load_model(const std::string& path) {
  // Binary magic distinguishes ensemble snapshots from linear JSON documents.
  std::ifstream probe(path, std::ios::binary);
  if (!probe) fail(Errc::io, "missing model file: " + path);
  char head[8] = {};
  probe.read(head, 8);
  probe.close();
  FittedModel m;
  json meta;
  if (std::memcmp(head, Ensemble::kMagic, 8) == 0) {
    m.ensemble = Ensemble::load(path);
    std::ifstream in(path + ".json");
    if (!in) fail(Errc::io, "missing model sidecar: " + path + ".json");
    in >> meta;
  } else {
    std::ifstream in(path);
    try {
      in >> meta;
    } catch (const json::exception& e) {
      fail(Errc::schema, "bad model file " + path + ": " + e.what());
    }
    const auto& jm = meta.at("model");
    m.linear.kind = jm.at("kind").get<std::string>();
    m.linear.alpha = jm.value("alpha", 0.0);
    m.linear.intercept = jm.at("intercept").get<double>();
    m.linear.beta = jm.at("beta").get<std::vector<double>>();
    m.linear.beta_std = jm.value("beta_std", std::vector<double>{});
    m.linear.rank = jm.value("rank", 0);
    m.linear.aliased = jm.value("aliased", std::vector<std::string>{});
    m.linear.converged = jm.value("converged", true);
    m.linear.sweeps = jm.value("sweeps", std::size_t{0});
  }
  if (meta.value("schema_version", 0) != 1) fail(Errc::schema, "unsupported model schema_version");
  m.spec = ModelSpec::from_json(meta.at("spec"));
  m.design.columns = meta.at("columns").get<std::vector<std::string>>();
  m.design.feature_width = meta.at("feature_width").get<std::size_t>();
  m.design.encoders = encoders_from_json(meta.at("encoders"));
  m.selected = meta.value("selected", std::vector<std::size_t>{});
  m.train_mean = meta.value("train_mean", 0.0);
  if (meta.value("schema_fingerprint", "") != columns_fingerprint(m.design.columns))
    fail(Errc::schema, "model schema fingerprint mismatch in " + path);
  const std::vector<std::string>& cols = m.design.columns;
  if (m.uses_linear() && m.linear.beta.size() != (m.selected.empty() ? cols.size() : m.selected.size()))
    fail(Errc::schema, "model coefficient count does not match columns in " + path);
  return m;
}

}  // namespace hpm
