#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpm/csv.hpp"
#include "hpm/error.hpp"
#include "hpm/features.hpp"
#include "hpm/time.hpp"
#include "hpm/types.hpp"

namespace hpm {

// One repeat-sale observation: two successive arm's-length transactions of
// the same property. Earlier sale is side s, later is side t.
struct SalePair {
  std::string property_key;
  std::string sale_id_s, sale_id_t;
  CivilDate date_s, date_t;
  int quarter_s = 0, quarter_t = 0;
  long dt_days = 0;
  double log_price_s = 0.0, log_price_t = 0.0;
  double log_diff = 0.0;  // log_price_t - log_price_s
};

struct PairingReport {
  std::size_t properties = 0;             // distinct property keys seen
  std::size_t properties_with_pairs = 0;  // keys with at least two dated sales
  std::size_t duplicates_dropped = 0;     // same-key same-date sales removed
  std::size_t pairs = 0;
};

// Groups sales by property key, sorts each group by date, collapses same-date
// duplicates to the higher price, and links successive sales: m dated sales
// yield m-1 pairs. Output order is by property key, then date.
inline std::vector<SalePair> pair_sales(const std::vector<SaleRecord>& sales, PairingReport* report = nullptr) {
  std::map<std::string, std::vector<const SaleRecord*>> by_key;
  for (const auto& s : sales) by_key[s.property_key].push_back(&s);

  PairingReport rep;
  rep.properties = by_key.size();
  std::vector<SalePair> pairs;
  for (auto& [key, group] : by_key) {
    std::sort(group.begin(), group.end(), [](const SaleRecord* a, const SaleRecord* b) {
      if (a->sale_date != b->sale_date) return a->sale_date < b->sale_date;
      if (a->price_per_unit != b->price_per_unit) return a->price_per_unit > b->price_per_unit;
      return a->sale_id < b->sale_id;
    });
    // After the sort each date's best record comes first; drop the rest.
    std::vector<const SaleRecord*> dated;
    for (const SaleRecord* s : group) {
      if (!dated.empty() && dated.back()->sale_date == s->sale_date) {
        ++rep.duplicates_dropped;
        continue;
      }
      dated.push_back(s);
    }
    if (dated.size() >= 2) ++rep.properties_with_pairs;
    for (std::size_t i = 0; i + 1 < dated.size(); ++i) {
      const SaleRecord& a = *dated[i];
      const SaleRecord& b = *dated[i + 1];
      SalePair p;
      p.property_key = key;
      p.sale_id_s = a.sale_id;
      p.sale_id_t = b.sale_id;
      p.date_s = a.sale_date;
      p.date_t = b.sale_date;
      p.quarter_s = a.quarter;
      p.quarter_t = b.quarter;
      p.dt_days = days_from_civil(b.sale_date) - days_from_civil(a.sale_date);
      p.log_price_s = a.log_price;
      p.log_price_t = b.log_price;
      p.log_diff = b.log_price - a.log_price;
      pairs.push_back(std::move(p));
    }
  }
  rep.pairs = pairs.size();
  if (report != nullptr) *report = rep;
  return pairs;
}

// Quarterly log price index, normalized to 0 at the base quarter (index 0).
struct PriceIndex {
  std::vector<double> log_index;  // length num_quarters, log_index[0] == 0
  double residual_variance = 0.0;
  std::size_t n_pairs = 0;
};

namespace detail {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace detail

// Interquarter regression of log price changes: each pair contributes a row
// with -1 at its earlier quarter and +1 at its later one; the base quarter's
// column is omitted and its index pinned to 0. Unweighted least squares.
// Every quarter must be linked to the base through the pair graph.
inline PriceIndex estimate_bmn_index(const std::vector<SalePair>& pairs, int num_quarters) {
  if (num_quarters < 1) fail(Errc::usage, "num_quarters must be positive");
  if (pairs.empty()) fail(Errc::data, "no repeat-sale pairs to estimate an index from");
  for (const auto& p : pairs)
    if (p.quarter_s < 0 || p.quarter_t < 0 || p.quarter_s >= num_quarters || p.quarter_t >= num_quarters)
      fail(Errc::data, "pair quarter outside index range for property " + p.property_key);

  detail::DisjointSet ds(num_quarters);
  for (const auto& p : pairs) ds.unite(p.quarter_s, p.quarter_t);
  std::string orphans;
  for (int q = 0; q < num_quarters; ++q) {
    if (ds.find(q) == ds.find(0)) continue;
    if (!orphans.empty()) orphans += ", ";
    orphans += std::to_string(q);
  }
  if (!orphans.empty())
    fail(Errc::data, "price index not identified: quarters {" + orphans + "} are not linked to the base quarter");

  const int p = num_quarters - 1;  // columns for quarters 1..T-1
  const std::size_t n = pairs.size();
  PriceIndex index;
  index.n_pairs = n;
  index.log_index.assign(static_cast<std::size_t>(num_quarters), 0.0);
  if (p == 0) return index;  // single quarter: index is identically 0

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pr = pairs[i];
    // Accumulate so a same-quarter pair nets to an all-zero row, not +1.
    if (pr.quarter_s > 0) x(static_cast<Eigen::Index>(i), pr.quarter_s - 1) -= 1.0;
    if (pr.quarter_t > 0) x(static_cast<Eigen::Index>(i), pr.quarter_t - 1) += 1.0;
    y(static_cast<Eigen::Index>(i)) = pr.log_diff;
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  gram.triangularView<Eigen::Upper>() = gram.transpose();
  const Eigen::VectorXd beta = gram.ldlt().solve(x.transpose() * y);
  for (int q = 1; q < num_quarters; ++q) index.log_index[static_cast<std::size_t>(q)] = beta(q - 1);

  const double ssr = (y - x * beta).squaredNorm();
  const long dof = static_cast<long>(n) - p;
  index.residual_variance = dof > 0 ? ssr / static_cast<double>(dof) : 0.0;
  return index;
}

// Regression dataset over price changes. Base columns are the holding period
// in days and the index change between the two sale quarters; when a feature
// matrix is supplied, each side's feature vector is appended (earlier side
// first). Target is the observed log price change. Adding a constant to every
// index level leaves d_index, and hence the dataset, unchanged.
struct ChangeDataset {
  std::vector<std::string> columns;
  std::size_t n = 0;
  std::vector<double> x;  // row-major, n x columns.size()
  std::vector<double> y;
  std::size_t skipped_pairs = 0;  // pairs with a side missing from the feature matrix

  double at(std::size_t row, std::size_t col) const { return x[row * columns.size() + col]; }
};

inline ChangeDataset build_change_dataset(const std::vector<SalePair>& pairs, const PriceIndex& index,
                                          const FeatureMatrix* fm = nullptr) {
  ChangeDataset ds;
  ds.columns = {"dt_days", "d_index"};
  std::map<std::string, std::size_t> row_of;
  if (fm != nullptr) {
    for (std::size_t i = 0; i < fm->n; ++i) row_of[fm->sale_id[i]] = i;
    for (const auto& name : fm->schema.columns) ds.columns.push_back("s_" + name);
    for (const auto& name : fm->schema.columns) ds.columns.push_back("t_" + name);
  }
  const std::size_t width = ds.columns.size();
  for (const auto& p : pairs) {
    if (p.quarter_s >= static_cast<int>(index.log_index.size()) ||
        p.quarter_t >= static_cast<int>(index.log_index.size()))
      fail(Errc::data, "pair quarter outside the supplied index for property " + p.property_key);
    std::size_t row_s = 0, row_t = 0;
    if (fm != nullptr) {
      const auto it_s = row_of.find(p.sale_id_s);
      const auto it_t = row_of.find(p.sale_id_t);
      if (it_s == row_of.end() || it_t == row_of.end()) {
        ++ds.skipped_pairs;
        continue;
      }
      row_s = it_s->second;
      row_t = it_t->second;
    }
    const std::size_t base = ds.x.size();
    ds.x.resize(base + width);
    ds.x[base] = static_cast<double>(p.dt_days);
    ds.x[base + 1] = index.log_index[static_cast<std::size_t>(p.quarter_t)] -
                     index.log_index[static_cast<std::size_t>(p.quarter_s)];
    if (fm != nullptr) {
      const std::size_t w = fm->schema.columns.size();
      const double* xs = fm->row(row_s);
      const double* xt = fm->row(row_t);
      std::copy(xs, xs + w, ds.x.begin() + static_cast<std::ptrdiff_t>(base + 2));
      std::copy(xt, xt + w, ds.x.begin() + static_cast<std::ptrdiff_t>(base + 2 + w));
    }
    ds.y.push_back(p.log_diff);
    ++ds.n;
  }
  return ds;
}

inline void write_pairs_csv(const std::string& path, const std::vector<SalePair>& pairs) {
  CsvWriter w(path);
  w.write_row({"property_key", "sale_id_s", "sale_id_t", "date_s", "date_t", "quarter_s", "quarter_t", "dt_days",
               "log_price_s", "log_price_t", "log_diff"});
  for (const auto& p : pairs)
    w.write_row({p.property_key, p.sale_id_s, p.sale_id_t, format_date(p.date_s), format_date(p.date_t),
                 std::to_string(p.quarter_s), std::to_string(p.quarter_t), std::to_string(p.dt_days),
                 fmt_double(p.log_price_s), fmt_double(p.log_price_t), fmt_double(p.log_diff)});
}

inline void write_index_csv(const std::string& path, const PriceIndex& index) {
  CsvWriter w(path);
  w.write_row({"quarter", "log_index"});
  for (std::size_t q = 0; q < index.log_index.size(); ++q)
    w.write_row({std::to_string(q), fmt_double(index.log_index[q])});
}

inline std::vector<SalePair> read_pairs_csv(const std::string& path) {
  CsvReader r(path);
  const std::size_t c_key = r.column("property_key");
  const std::size_t c_ids = r.column("sale_id_s"), c_idt = r.column("sale_id_t");
  const std::size_t c_ds = r.column("date_s"), c_dt = r.column("date_t");
  const std::size_t c_qs = r.column("quarter_s"), c_qt = r.column("quarter_t");
  const std::size_t c_days = r.column("dt_days");
  const std::size_t c_ps = r.column("log_price_s"), c_pt = r.column("log_price_t"), c_diff = r.column("log_diff");
  std::vector<SalePair> pairs;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != r.header().size()) fail(Errc::schema, "ragged row in " + path);
    SalePair p;
    p.property_key = f[c_key];
    p.sale_id_s = f[c_ids];
    p.sale_id_t = f[c_idt];
    auto ds = parse_date(f[c_ds]), dt = parse_date(f[c_dt]);
    if (!ds || !dt) fail(Errc::schema, "cannot parse pair dates in " + path);
    p.date_s = *ds;
    p.date_t = *dt;
    p.quarter_s = static_cast<int>(require_int(f[c_qs], "quarter_s"));
    p.quarter_t = static_cast<int>(require_int(f[c_qt], "quarter_t"));
    p.dt_days = static_cast<long>(require_int(f[c_days], "dt_days"));
    p.log_price_s = require_double(f[c_ps], "log_price_s");
    p.log_price_t = require_double(f[c_pt], "log_price_t");
    p.log_diff = require_double(f[c_diff], "log_diff");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace hpm
