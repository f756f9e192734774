#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpm/csv.hpp"
#include "hpm/error.hpp"
#include "hpm/features.hpp"
#include "hpm/models/model.hpp"
#include "hpm/parallel.hpp"
#include "hpm/rng.hpp"

namespace hpm {

// Fold assignments for repeated k-fold CV. Standard folds shuffle rows into
// near-equal parts; grouped folds shuffle whole group keys so no key ever
// spans a train/test boundary.
struct FoldPlan {
  std::string scheme = "standard";  // standard | tract | zipcode | district
  int k = 5;
  int repetitions = 20;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> assignment;  // [repetition][row] -> fold

  std::size_t rows() const { return assignment.empty() ? 0 : assignment[0].size(); }
};

namespace detail {

// Near-equal part sizes: the first n%k parts take one extra.
inline std::vector<std::size_t> part_sizes(std::size_t n, int k) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), n / static_cast<std::size_t>(k));
  for (std::size_t f = 0; f < n % static_cast<std::size_t>(k); ++f) ++sizes[f];
  return sizes;
}

}  // namespace detail

inline FoldPlan make_fold_plan(std::size_t n, int k, int repetitions, std::uint64_t seed) {
  if (k < 2) fail(Errc::usage, "fold count must be at least 2");
  if (repetitions < 1) fail(Errc::usage, "repetitions must be at least 1");
  if (n < static_cast<std::size_t>(k)) fail(Errc::data, "fewer rows than folds");
  FoldPlan plan;
  plan.scheme = "standard";
  plan.k = k;
  plan.repetitions = repetitions;
  plan.seed = seed;
  plan.assignment.assign(static_cast<std::size_t>(repetitions), std::vector<int>(n, 0));
  std::vector<std::size_t> order(n);
  for (int rep = 0; rep < repetitions; ++rep) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    rng.shuffle(order.begin(), order.end());
    const auto sizes = detail::part_sizes(n, k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f)
      for (std::size_t c = 0; c < sizes[static_cast<std::size_t>(f)]; ++c)
        plan.assignment[static_cast<std::size_t>(rep)][order[pos++]] = f;
  }
  return plan;
}

// `groups` carries one key per row; `scheme` is the report label (tract,
// zipcode, district). Folds balance group count, not row count.
inline FoldPlan make_grouped_fold_plan(const std::vector<std::string>& groups, const std::string& scheme, int k,
                                       int repetitions, std::uint64_t seed) {
  if (k < 2) fail(Errc::usage, "fold count must be at least 2");
  if (repetitions < 1) fail(Errc::usage, "repetitions must be at least 1");
  std::set<std::string> uniq(groups.begin(), groups.end());
  if (uniq.size() < static_cast<std::size_t>(k))
    fail(Errc::data, "grouped cv needs at least k distinct groups: have " + std::to_string(uniq.size()) +
                         ", k=" + std::to_string(k));
  std::vector<std::string> keys(uniq.begin(), uniq.end());

  FoldPlan plan;
  plan.scheme = scheme;
  plan.k = k;
  plan.repetitions = repetitions;
  plan.seed = seed;
  plan.assignment.assign(static_cast<std::size_t>(repetitions), std::vector<int>(groups.size(), 0));
  const std::size_t g = keys.size();
  std::vector<std::size_t> order(g);
  for (int rep = 0; rep < repetitions; ++rep) {
    for (std::size_t i = 0; i < g; ++i) order[i] = i;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    rng.shuffle(order.begin(), order.end());
    std::map<std::string, int> fold_of;
    const auto sizes = detail::part_sizes(g, k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f)
      for (std::size_t c = 0; c < sizes[static_cast<std::size_t>(f)]; ++c) fold_of[keys[order[pos++]]] = f;
    for (std::size_t row = 0; row < groups.size(); ++row)
      plan.assignment[static_cast<std::size_t>(rep)][row] = fold_of[groups[row]];
  }
  return plan;
}

struct FoldResult {
  int repetition = 0;
  int fold = 0;
  std::optional<double> r2;
  std::size_t n_test = 0;
  std::size_t n_missing = 0;
};

struct CVOptions {
  int jobs = 1;
  std::string aggregation = "per_fold";  // per_fold | per_repetition
  R2Baseline baseline = R2Baseline::test_mean;
};

struct CVReport {
  std::string model_desc, blocks_desc, scheme;
  int k = 5, repetitions = 20;
  std::uint64_t seed = 0;
  std::string aggregation = "per_fold";
  double mean_r2 = 0.0, std_r2 = 0.0;
  double missing_rate = 0.0;
  std::size_t undefined_folds = 0;
  std::vector<FoldResult> per_fold;

  json to_json() const {
    json folds = json::array();
    for (const auto& f : per_fold) {
      json jf{{"repetition", f.repetition}, {"fold", f.fold}, {"n_test", f.n_test}, {"n_missing", f.n_missing}};
      if (f.r2) jf["r2"] = *f.r2;
      else jf["r2"] = nullptr;
      folds.push_back(std::move(jf));
    }
    return json{{"schema_version", 1},
                {"model", model_desc},
                {"blocks", blocks_desc},
                {"scheme", scheme},
                {"k", k},
                {"repetitions", repetitions},
                {"seed", seed},
                {"aggregation", aggregation},
                {"mean_r2", mean_r2},
                {"std_r2", std_r2},
                {"missing_rate", missing_rate},
                {"undefined_folds", undefined_folds},
                {"per_fold", std::move(folds)}};
  }

  static CVReport from_json(const json& j) {
    if (j.value("schema_version", 0) != 1) fail(Errc::schema, "unsupported cv report schema_version");
    CVReport r;
    r.model_desc = j.at("model").get<std::string>();
    r.blocks_desc = j.at("blocks").get<std::string>();
    r.scheme = j.at("scheme").get<std::string>();
    r.k = j.at("k").get<int>();
    r.repetitions = j.at("repetitions").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.aggregation = j.at("aggregation").get<std::string>();
    r.mean_r2 = j.at("mean_r2").get<double>();
    r.std_r2 = j.at("std_r2").get<double>();
    r.missing_rate = j.at("missing_rate").get<double>();
    r.undefined_folds = j.at("undefined_folds").get<std::size_t>();
    for (const auto& jf : j.at("per_fold")) {
      FoldResult f;
      f.repetition = jf.at("repetition").get<int>();
      f.fold = jf.at("fold").get<int>();
      f.n_test = jf.at("n_test").get<std::size_t>();
      f.n_missing = jf.at("n_missing").get<std::size_t>();
      if (!jf.at("r2").is_null()) f.r2 = jf.at("r2").get<double>();
      r.per_fold.push_back(f);
    }
    return r;
  }
};

// Recomputes the report aggregates from per-fold records (pure function, so
// reports can be re-aggregated after the fact).
inline void aggregate_cv(CVReport& report) {
  std::vector<double> values;
  if (report.aggregation == "per_repetition") {
    std::map<int, std::vector<double>> by_rep;
    for (const auto& f : report.per_fold)
      if (f.r2) by_rep[f.repetition].push_back(*f.r2);
    for (const auto& [rep, v] : by_rep) values.push_back(mean_of(v));
  } else {
    for (const auto& f : report.per_fold)
      if (f.r2) values.push_back(*f.r2);
  }
  report.mean_r2 = mean_of(values);
  report.std_r2 = sample_std(values);
  std::size_t missing = 0, total = 0, undefined = 0;
  for (const auto& f : report.per_fold) {
    missing += f.n_missing;
    total += f.n_test;
    if (!f.r2) ++undefined;
  }
  report.missing_rate = total == 0 ? 0.0 : static_cast<double>(missing) / static_cast<double>(total);
  report.undefined_folds = undefined;
}

// Fits and scores every repetition x fold cell. Cells run in parallel into
// keyed slots; per-cell model seeds derive from (plan seed, spec seed, cell),
// so results are independent of scheduling and job count.
inline CVReport run_cv(const FeatureMatrix& fm, const ModelSpec& spec, const FoldPlan& plan,
                       const CVOptions& options = {}) {
  spec.validate();
  if (plan.rows() != fm.n) fail(Errc::usage, "fold plan does not cover the feature matrix rows");
  if (options.aggregation != "per_fold" && options.aggregation != "per_repetition")
    fail(Errc::usage, "aggregation must be per_fold or per_repetition");

  CVReport report;
  report.model_desc = spec.descriptor();
  std::string blocks;
  for (const auto& b : fm.schema.blocks) {
    if (!blocks.empty()) blocks += "+";
    blocks += b.name;
  }
  report.blocks_desc = blocks;
  report.scheme = plan.scheme;
  report.k = plan.k;
  report.repetitions = plan.repetitions;
  report.seed = plan.seed;
  report.aggregation = options.aggregation;

  const std::size_t cells = static_cast<std::size_t>(plan.repetitions) * static_cast<std::size_t>(plan.k);
  report.per_fold.assign(cells, FoldResult{});

  parallel_for(cells, options.jobs, [&](std::size_t cell) {
    const int rep = static_cast<int>(cell) / plan.k;
    const int fold = static_cast<int>(cell) % plan.k;
    const auto& assign = plan.assignment[static_cast<std::size_t>(rep)];
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < fm.n; ++i)
      (assign[i] == fold ? test_rows : train_rows).push_back(i);

    ModelSpec cell_spec = spec;
    cell_spec.seed = derive_seed(derive_seed(plan.seed, spec.seed), static_cast<std::uint64_t>(cell));
    FittedModel model = fit_model(fm, train_rows, cell_spec);

    std::vector<double> y_true, y_pred, scratch;
    std::size_t missing = 0;
    for (std::size_t row : test_rows) {
      auto pred = model.predict_row(fm, row, scratch);
      if (!pred) {
        ++missing;
        continue;
      }
      y_true.push_back(fm.y[row]);
      y_pred.push_back(*pred);
    }
    FoldResult res;
    res.repetition = rep;
    res.fold = fold;
    res.n_test = test_rows.size();
    res.n_missing = missing;
    res.r2 = r_squared(y_true, y_pred, options.baseline, model.train_mean);
    report.per_fold[cell] = res;
  });

  aggregate_cv(report);
  return report;
}

// --- comparison table (report subcommand) ---

inline const std::vector<std::string> kDatasetColumns = {"none", "311", "crime", "taxi", "all"};

// Dataset-combination column from the block list: which of the three event
// families the matrix carried.
inline std::string dataset_column(const std::string& blocks_desc) {
  std::set<std::string> have;
  std::size_t start = 0;
  while (start <= blocks_desc.size()) {
    const std::size_t end = blocks_desc.find('+', start);
    const std::string b = blocks_desc.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (b == "311" || b == "crime" || b == "taxi") have.insert(b);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (have.empty()) return "none";
  if (have.size() == 3) return "all";
  if (have.size() == 1) return *have.begin();
  std::string joined;
  for (const auto& b : have) {
    if (!joined.empty()) joined += "+";
    joined += b;
  }
  return joined;
}

inline std::string report_row_label(const CVReport& cell, bool mixed_schemes) {
  std::string label = cell.model_desc;
  if (cell.blocks_desc.find("tc") != std::string::npos) label += "+tc";
  if (mixed_schemes || cell.scheme != "standard") label += "@" + cell.scheme;
  return label;
}

inline std::string format_cell(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f (%.4f)", mean, stddev);
  return buf;
}

// Rows = model (and scheme when they differ), columns = dataset combination
// in the fixed order none, 311, crime, taxi, all. Returns the JSON form;
// write_report_csv renders the same cells with identical numbers.
inline json make_report(const std::vector<CVReport>& cells) {
  std::set<std::string> schemes;
  for (const auto& c : cells) schemes.insert(c.scheme);
  const bool mixed = schemes.size() > 1;

  std::set<std::string> extra_columns;
  std::map<std::string, std::map<std::string, const CVReport*>> table;
  for (const auto& c : cells) {
    const std::string row = report_row_label(c, mixed);
    const std::string col = dataset_column(c.blocks_desc);
    if (std::find(kDatasetColumns.begin(), kDatasetColumns.end(), col) == kDatasetColumns.end())
      extra_columns.insert(col);
    if (table[row].count(col)) fail(Errc::data, "duplicate report cell for row '" + row + "', column '" + col + "'");
    table[row][col] = &c;
  }
  std::vector<std::string> columns = kDatasetColumns;
  for (const auto& c : extra_columns) columns.push_back(c);

  json rows = json::array();
  const CVReport* best = nullptr;
  std::string best_row, best_col;
  for (const auto& [label, cols] : table) {
    json jr{{"row", label}};
    json jc = json::object();
    for (const auto& [col, cell] : cols) {
      jc[col] = json{{"mean_r2", cell->mean_r2},
                     {"std_r2", cell->std_r2},
                     {"missing_rate", cell->missing_rate},
                     {"formatted", format_cell(cell->mean_r2, cell->std_r2)}};
      if (best == nullptr || cell->mean_r2 > best->mean_r2) {
        best = cell;
        best_row = label;
        best_col = col;
      }
    }
    jr["cells"] = std::move(jc);
    rows.push_back(std::move(jr));
  }
  json out{{"schema_version", 1}, {"columns", columns}, {"rows", std::move(rows)}};
  if (best != nullptr)
    out["best"] = json{{"row", best_row}, {"column", best_col}, {"mean_r2", best->mean_r2}, {"std_r2", best->std_r2}};
  return out;
}

inline void write_report_csv(const std::string& path, const json& report) {
  CsvWriter w(path);
  std::vector<std::string> header = {"row"};
  for (const auto& c : report.at("columns")) header.push_back(c.get<std::string>());
  w.write_row(header);
  std::vector<std::string> f;
  for (const auto& row : report.at("rows")) {
    f.clear();
    f.push_back(row.at("row").get<std::string>());
    const auto& cells = row.at("cells");
    for (const auto& c : report.at("columns")) {
      const std::string col = c.get<std::string>();
      f.push_back(cells.contains(col) ? cells[col].at("formatted").get<std::string>() : "");
    }
    w.write_row(f);
  }
}

}  // namespace hpm
