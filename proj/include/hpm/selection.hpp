#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpm/csv.hpp"
#include "hpm/error.hpp"
#include "hpm/features.hpp"
#include "hpm/models/linear.hpp"
#include "hpm/models/model.hpp"

namespace hpm {

// Lasso-based feature screening at one penalty level. A column is kept when
// its standardized coefficient is nonzero beyond kSelectionTolerance.
struct SelectionResult {
  double alpha = 0.0;
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  std::map<std::string, std::size_t> kept_by_block;
  bool converged = true;
};

inline SelectionResult select_features(const FeatureMatrix& fm, double alpha) {
  const std::size_t p = fm.schema.columns.size();
  const LinearModel model = fit_lasso(fm.x.data(), fm.y, fm.n, p, fm.schema.columns, alpha);
  SelectionResult result;
  result.alpha = alpha;
  result.converged = model.converged;
  for (const auto& block : fm.schema.blocks) result.kept_by_block[block.name] = 0;
  for (std::size_t j = 0; j < p; ++j) {
    if (std::abs(model.beta_std[j]) > kSelectionTolerance) {
      result.kept.push_back(fm.schema.columns[j]);
      for (const auto& block : fm.schema.blocks)
        if (j >= block.offset && j < block.offset + block.width) ++result.kept_by_block[block.name];
    } else {
      result.dropped.push_back(fm.schema.columns[j]);
    }
  }
  return result;
}

inline std::vector<SelectionResult> selection_curve(const FeatureMatrix& fm, const std::vector<double>& alphas) {
  std::vector<SelectionResult> curve;
  curve.reserve(alphas.size());
  for (double alpha : alphas) curve.push_back(select_features(fm, alpha));
  return curve;
}

// Grid syntax "<lo>:<hi>:<step>dex", e.g. "1e-6:1e-1:0.5dex": log10-spaced
// values from lo to hi inclusive in steps of `step` decades. The step must
// tile the range exactly.
inline std::vector<double> parse_alpha_grid(const std::string& text) {
  const std::size_t c1 = text.find(':');
  const std::size_t c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    fail(Errc::usage, "alpha grid must look like <lo>:<hi>:<step>dex, got '" + text + "'");
  std::string step_text = text.substr(c2 + 1);
  if (step_text.size() < 4 || step_text.substr(step_text.size() - 3) != "dex")
    fail(Errc::usage, "alpha grid step must end in 'dex', got '" + step_text + "'");
  step_text.resize(step_text.size() - 3);

  const double lo = require_double(text.substr(0, c1), "alpha grid lower bound");
  const double hi = require_double(text.substr(c1 + 1, c2 - c1 - 1), "alpha grid upper bound");
  const double step = require_double(step_text, "alpha grid step");
  if (lo <= 0.0 || hi <= 0.0) fail(Errc::usage, "alpha grid bounds must be positive");
  if (step <= 0.0) fail(Errc::usage, "alpha grid step must be positive");
  if (hi < lo) fail(Errc::usage, "alpha grid upper bound is below the lower bound");

  const double span = std::log10(hi) - std::log10(lo);
  const long steps = std::lround(span / step);
  if (std::abs(span - static_cast<double>(steps) * step) > 1e-9)
    fail(Errc::usage, "alpha grid step does not tile the range '" + text + "'");
  std::vector<double> alphas;
  for (long i = 0; i <= steps; ++i) alphas.push_back(std::pow(10.0, std::log10(lo) + static_cast<double>(i) * step));
  return alphas;
}

// Curve CSV: one row per penalty, kept counts total and per block. Block
// columns follow the schema's block order.
inline void write_selection_csv(const std::string& path, const std::vector<SelectionResult>& curve,
                                const FeatureSchema& schema) {
  CsvWriter w(path);
  std::vector<std::string> header = {"alpha", "kept", "dropped", "converged"};
  for (const auto& block : schema.blocks) header.push_back("kept_" + block.name);
  w.write_row(header);
  std::vector<std::string> fields;
  for (const auto& r : curve) {
    fields.clear();
    fields.push_back(fmt_double(r.alpha));
    fields.push_back(std::to_string(r.kept.size()));
    fields.push_back(std::to_string(r.dropped.size()));
    fields.push_back(r.converged ? "1" : "0");
    for (const auto& block : schema.blocks)
      fields.push_back(std::to_string(r.kept_by_block.count(block.name) ? r.kept_by_block.at(block.name) : 0));
    w.write_row(fields);
  }
}

inline json selection_curve_json(const std::vector<SelectionResult>& curve) {
  json rows = json::array();
  for (const auto& r : curve) {
    json blocks = json::object();
    for (const auto& [name, count] : r.kept_by_block) blocks[name] = count;
    rows.push_back(json{{"alpha", r.alpha},
                        {"kept", r.kept},
                        {"n_kept", r.kept.size()},
                        {"n_dropped", r.dropped.size()},
                        {"kept_by_block", std::move(blocks)},
                        {"converged", r.converged}});
  }
  return json{{"schema_version", 1}, {"curve", std::move(rows)}};
}

}  // namespace hpm
