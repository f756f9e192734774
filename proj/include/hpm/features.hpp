#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpm/csv.hpp"
#include "hpm/error.hpp"
#include "hpm/geoindex.hpp"
#include "hpm/ingest.hpp"
#include "hpm/parallel.hpp"
#include "hpm/time.hpp"
#include "hpm/types.hpp"

namespace hpm {

// --- event aggregation primitives ---

inline double volume_feature(std::size_t n) { return std::log1p(static_cast<double>(n)); }

inline double volume_feature(std::size_t n, const std::string& transform) {
  return transform == "raw" ? static_cast<double>(n) : volume_feature(n);
}

// Shares that sum to 1, or all zeros when the window is empty.
inline std::vector<double> normalize_counts(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  std::vector<double> out(counts.size(), 0.0);
  if (total > 0.0)
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] / total;
  return out;
}

// Weekly timeline bin: Monday=0 weekday times eight 3-hour slots.
inline int timeline_bin(std::int64_t timestamp) {
  const int wd = weekday_of(timestamp);
  const int hour = second_of_day(timestamp) / 3600;
  return wd * 8 + hour / 3;
}

// --- schema ---

struct FeatureBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 0;
};

inline const std::vector<std::string> kAllBlockNames = {"hc", "d", "tc", "311", "crime", "taxi"};

struct FeatureSchema {
  std::vector<FeatureBlock> blocks;
  std::vector<std::string> columns;
  int num_quarters = 0;

  std::size_t width() const { return columns.size(); }

  bool has_block(const std::string& name) const {
    for (const auto& b : blocks)
      if (b.name == name) return true;
    return false;
  }

  const FeatureBlock& block(const std::string& name) const {
    for (const auto& b : blocks)
      if (b.name == name) return b;
    fail(Errc::schema, "feature schema has no block '" + name + "'");
  }

  static FeatureSchema make(const std::set<std::string>& enabled, const IngestConfig& cfg) {
    for (const auto& name : enabled)
      if (std::find(kAllBlockNames.begin(), kAllBlockNames.end(), name) == kAllBlockNames.end())
        fail(Errc::usage, "unknown feature block '" + name + "'");
    FeatureSchema s;
    s.num_quarters = cfg.window.num_quarters();
    auto add = [&s](const std::string& name, std::vector<std::string> cols) {
      s.blocks.push_back({name, s.columns.size(), cols.size()});
      for (auto& c : cols) s.columns.push_back(std::move(c));
    };
    char buf[80];
    if (enabled.count("hc")) {
      std::vector<std::string> cols;
      for (int i = 0; i < kNumCharacteristics; ++i) cols.push_back(characteristic_column("c_", i));
      add("hc", std::move(cols));
    }
    if (enabled.count("d")) {
      // First quarter is the baseline and carries no dummy.
      std::vector<std::string> cols;
      for (int q = 1; q < s.num_quarters; ++q) {
        std::snprintf(buf, sizeof buf, "q_%02d", q);
        cols.emplace_back(buf);
      }
      add("d", std::move(cols));
    }
    if (enabled.count("tc")) {
      std::vector<std::string> cols;
      for (const auto& n : kAcsNames) cols.push_back(n);
      for (const auto& n : kLehdNames) cols.push_back(n);
      add("tc", std::move(cols));
    }
    auto timeline_cols = [&buf](const char* prefix) {
      std::vector<std::string> cols;
      for (int b = 0; b < static_cast<int>(kTimelineBins); ++b) {
        std::snprintf(buf, sizeof buf, "%s%02d", prefix, b);
        cols.emplace_back(buf);
      }
      return cols;
    };
    if (enabled.count("311")) {
      std::vector<std::string> cols = {"n311_log1p"};
      for (const auto& c : cfg.categories311.names) cols.push_back("d311_" + c);
      for (auto& c : timeline_cols("w311_")) cols.push_back(std::move(c));
      add("311", std::move(cols));
    }
    if (enabled.count("crime")) {
      std::vector<std::string> cols = {"ncrime_log1p"};
      for (const auto& c : cfg.categories_crime.names) cols.push_back("dcrime_" + c);
      for (auto& c : timeline_cols("wcrime_")) cols.push_back(std::move(c));
      add("crime", std::move(cols));
    }
    if (enabled.count("taxi")) {
      std::vector<std::string> cols = {"npickup_log1p", "ndropoff_log1p"};
      for (auto& c : timeline_cols("wpickup_")) cols.push_back(std::move(c));
      for (auto& c : timeline_cols("wdropoff_")) cols.push_back(std::move(c));
      add("taxi", std::move(cols));
    }
    return s;
  }

  json to_json() const {
    json jb = json::array();
    for (const auto& b : blocks) jb.push_back(json{{"name", b.name}, {"offset", b.offset}, {"width", b.width}});
    return json{{"blocks", jb}, {"columns", columns}, {"num_quarters", num_quarters}};
  }

  static FeatureSchema from_json(const json& j) {
    FeatureSchema s;
    s.num_quarters = j.at("num_quarters").get<int>();
    s.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& b : j.at("blocks"))
      s.blocks.push_back(
          {b.at("name").get<std::string>(), b.at("offset").get<std::size_t>(), b.at("width").get<std::size_t>()});
    std::size_t off = 0;
    for (const auto& b : s.blocks) {
      if (b.offset != off) fail(Errc::schema, "feature schema blocks are not contiguous");
      off += b.width;
    }
    if (off != s.columns.size()) fail(Errc::schema, "feature schema width mismatch");
    return s;
  }
};

// --- assembled matrix ---

struct FeatureMatrix {
  FeatureSchema schema;
  std::size_t n = 0;
  std::vector<double> x;  // n x width, row-major
  std::vector<double> y;  // log price per unit
  std::vector<std::string> sale_id;
  std::vector<int> quarter;
  std::vector<std::string> tract_id, zipcode_id, district_id;
  std::vector<std::string> excluded_sale_ids;  // dropped for missing tract census
  std::vector<std::array<std::uint32_t, kNumDatasetKinds>> raw_counts;  // diagnostics: untransformed volumes

  double at(std::size_t i, std::size_t j) const { return x[i * schema.width() + j]; }
  const double* row(std::size_t i) const { return x.data() + i * schema.width(); }

  const std::vector<std::string>& group(const std::string& key) const {
    if (key == "tract_id") return tract_id;
    if (key == "zipcode_id") return zipcode_id;
    if (key == "district_id") return district_id;
    fail(Errc::usage, "unknown group column '" + key + "'");
  }
};

struct WindowBounds {
  std::int64_t t0, t1;  // [t0, t1)
};

inline WindowBounds sale_window(const SaleRecord& s, const AggregationConfig& agg) {
  const std::int64_t midnight = seconds_from_civil(s.sale_date);
  const std::int64_t len = static_cast<std::int64_t>(agg.window_days) * 86400;
  if (agg.window_mode == "centered") {
    const std::int64_t start = midnight - len / 2;
    return {start, start + len};
  }
  return {midnight - len, midnight};  // strictly before the sale day
}

// Fills one row of the design matrix from the events the index returns for
// this sale's disc and window. `scratch` avoids reallocation across sales.
struct FeatureScratch {
  std::vector<std::uint32_t> hits;
  std::vector<double> cat311, cat_crime, tl311, tl_crime, tl_pick, tl_drop;
};

inline void fill_feature_row(double* row, const SaleRecord& s, const SpatioTemporalIndex& index,
                             const FeatureSchema& schema, const IngestConfig& cfg, const double* tc_values,
                             FeatureScratch& scratch, std::uint32_t* raw_counts = nullptr) {
  const std::size_t width = schema.width();
  std::fill(row, row + width, 0.0);
  if (raw_counts != nullptr) std::fill(raw_counts, raw_counts + kNumDatasetKinds, 0u);
  if (schema.has_block("hc")) {
    const auto& b = schema.block("hc");
    for (std::size_t k = 0; k < b.width; ++k) row[b.offset + k] = s.characteristics[k];
  }
  if (schema.has_block("d")) {
    const auto& b = schema.block("d");
    if (s.quarter > 0) row[b.offset + static_cast<std::size_t>(s.quarter - 1)] = 1.0;
  }
  if (schema.has_block("tc")) {
    const auto& b = schema.block("tc");
    for (std::size_t k = 0; k < b.width; ++k) row[b.offset + k] = tc_values[k];
  }

  const bool want311 = schema.has_block("311");
  const bool want_crime = schema.has_block("crime");
  const bool want_taxi = schema.has_block("taxi");
  if (!want311 && !want_crime && !want_taxi) return;

  const WindowBounds wb = sale_window(s, cfg.aggregation);
  QueryScope scope{s.x, s.y, cfg.aggregation.radius_m, wb.t1, wb.t1 - wb.t0};
  scratch.hits.clear();
  index.query(scope, scratch.hits);

  auto reset = [](std::vector<double>& v, std::size_t n) { v.assign(n, 0.0); };
  reset(scratch.cat311, cfg.categories311.size());
  reset(scratch.cat_crime, cfg.categories_crime.size());
  reset(scratch.tl311, kTimelineBins);
  reset(scratch.tl_crime, kTimelineBins);
  reset(scratch.tl_pick, kTimelineBins);
  reset(scratch.tl_drop, kTimelineBins);
  std::size_t n311 = 0, ncrime = 0, npick = 0, ndrop = 0;

  for (std::size_t idx : scratch.hits) {
    const EventRecord& e = index.events()[idx];
    const int bin = timeline_bin(e.timestamp);
    switch (e.kind) {
      case DatasetKind::complaint311:
        if (!want311) break;
        ++n311;
        scratch.cat311[e.category] += 1.0;
        scratch.tl311[bin] += 1.0;
        break;
      case DatasetKind::crime:
        if (!want_crime) break;
        ++ncrime;
        scratch.tl_crime[bin] += 1.0;
        scratch.cat_crime[e.category] += 1.0;
        break;
      case DatasetKind::taxi_pickup:
        if (!want_taxi) break;
        ++npick;
        scratch.tl_pick[bin] += 1.0;
        break;
      case DatasetKind::taxi_dropoff:
        if (!want_taxi) break;
        ++ndrop;
        scratch.tl_drop[bin] += 1.0;
        break;
    }
  }

  const std::string& vt = cfg.aggregation.volume_transform;
  auto emit = [&](const FeatureBlock& b, std::initializer_list<double> volumes,
                  std::initializer_list<const std::vector<double>*> dists) {
    std::size_t off = b.offset;
    for (double v : volumes) row[off++] = v;
    for (const auto* d : dists) {
      const auto shares = normalize_counts(*d);
      for (double v : shares) row[off++] = v;
    }
  };
  if (want311) emit(schema.block("311"), {volume_feature(n311, vt)}, {&scratch.cat311, &scratch.tl311});
  if (want_crime) emit(schema.block("crime"), {volume_feature(ncrime, vt)}, {&scratch.cat_crime, &scratch.tl_crime});
  if (want_taxi)
    emit(schema.block("taxi"), {volume_feature(npick, vt), volume_feature(ndrop, vt)},
         {&scratch.tl_pick, &scratch.tl_drop});
  if (raw_counts != nullptr) {
    raw_counts[static_cast<int>(DatasetKind::complaint311)] = static_cast<std::uint32_t>(n311);
    raw_counts[static_cast<int>(DatasetKind::crime)] = static_cast<std::uint32_t>(ncrime);
    raw_counts[static_cast<int>(DatasetKind::taxi_pickup)] = static_cast<std::uint32_t>(npick);
    raw_counts[static_cast<int>(DatasetKind::taxi_dropoff)] = static_cast<std::uint32_t>(ndrop);
  }
}

// Assembles the design matrix. Sales with no usable tract census are dropped
// (and reported) when the tc block is requested. Any non-finite cell is a
// hard error naming the sale and column. Rows are computed in parallel into
// per-sale slots, then packed in input order.
inline FeatureMatrix assemble_feature_matrix(const std::vector<SaleRecord>& sales, const SpatioTemporalIndex& index,
                                             const FeatureSchema& schema, const IngestConfig& cfg,
                                             const TcJoin* tc_join, int jobs = 1) {
  const bool want_tc = schema.has_block("tc");
  if (want_tc && tc_join == nullptr) fail(Errc::usage, "tc block requested but no census join supplied");
  if (want_tc && tc_join->values.size() != sales.size())
    fail(Errc::usage, "census join does not cover the sales set");

  const std::size_t width = schema.width();
  std::vector<double> rows(sales.size() * width);
  std::vector<std::array<std::uint32_t, kNumDatasetKinds>> counts(sales.size());
  std::vector<char> skip(sales.size(), 0);
  static thread_local FeatureScratch scratch;

  parallel_for(sales.size(), jobs, [&](std::size_t i) {
    if (want_tc && tc_join->missing[i]) {
      skip[i] = 1;
      return;
    }
    const double* tc = want_tc ? tc_join->values[i].data() : nullptr;
    fill_feature_row(rows.data() + i * width, sales[i], index, schema, cfg, tc, scratch, counts[i].data());
  });

  FeatureMatrix fm;
  fm.schema = schema;
  for (std::size_t i = 0; i < sales.size(); ++i) {
    if (skip[i]) {
      fm.excluded_sale_ids.push_back(sales[i].sale_id);
      continue;
    }
    const double* row = rows.data() + i * width;
    for (std::size_t j = 0; j < width; ++j) {
      if (!std::isfinite(row[j]))
        fail(Errc::data, "non-finite feature for sale " + sales[i].sale_id + " column " + schema.columns[j]);
    }
    if (!std::isfinite(sales[i].log_price))
      fail(Errc::data, "non-finite log price for sale " + sales[i].sale_id);
    fm.x.insert(fm.x.end(), row, row + width);
    fm.y.push_back(sales[i].log_price);
    fm.sale_id.push_back(sales[i].sale_id);
    fm.quarter.push_back(sales[i].quarter);
    fm.tract_id.push_back(sales[i].tract_id);
    fm.zipcode_id.push_back(sales[i].zipcode_id);
    fm.district_id.push_back(sales[i].district_id);
    fm.raw_counts.push_back(counts[i]);
  }
  fm.n = fm.y.size();
  return fm;
}

// --- matrix file IO: CSV of meta + feature columns, JSON sidecar with the schema ---

inline const std::vector<std::string> kMatrixMetaColumns = {"sale_id", "log_price", "quarter",
                                                            "tract_id", "zipcode_id", "district_id"};

inline void write_feature_matrix(const std::string& csv_path, const std::string& json_path, const FeatureMatrix& fm,
                                 const json& aggregation_info = json::object()) {
  CsvWriter w(csv_path);
  std::vector<std::string> header = kMatrixMetaColumns;
  for (const auto& c : fm.schema.columns) header.push_back(c);
  w.write_row(header);
  std::vector<std::string> f;
  for (std::size_t i = 0; i < fm.n; ++i) {
    f.clear();
    f.push_back(fm.sale_id[i]);
    f.push_back(fmt_double(fm.y[i]));
    f.push_back(std::to_string(fm.quarter[i]));
    f.push_back(fm.tract_id[i]);
    f.push_back(fm.zipcode_id[i]);
    f.push_back(fm.district_id[i]);
    const double* row = fm.row(i);
    for (std::size_t j = 0; j < fm.schema.width(); ++j) f.push_back(fmt_double(row[j]));
    w.write_row(f);
  }
  w.flush();

  json meta{{"schema_version", 1},
            {"rows", fm.n},
            {"meta_columns", kMatrixMetaColumns},
            {"schema", fm.schema.to_json()},
            {"excluded_sale_ids", fm.excluded_sale_ids}};
  if (!aggregation_info.empty()) meta["aggregation"] = aggregation_info;
  if (!fm.raw_counts.empty()) {
    json rc;
    for (std::size_t k = 0; k < kNumDatasetKinds; ++k) {
      json arr = json::array();
      for (const auto& c : fm.raw_counts) arr.push_back(c[k]);
      rc[std::string(to_string(static_cast<DatasetKind>(k)))] = std::move(arr);
    }
    meta["raw_counts"] = std::move(rc);
  }
  std::ofstream out(json_path);
  if (!out) fail(Errc::io, "cannot write " + json_path);
  out << meta.dump(2) << "\n";
}

inline FeatureMatrix read_feature_matrix(const std::string& csv_path, const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) fail(Errc::io, "missing feature sidecar: " + json_path);
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    fail(Errc::schema, "bad feature sidecar " + json_path + ": " + e.what());
  }
  if (meta.value("schema_version", 0) != 1) fail(Errc::schema, "unsupported feature schema_version");
  FeatureMatrix fm;
  fm.schema = FeatureSchema::from_json(meta.at("schema"));
  if (meta.contains("excluded_sale_ids"))
    fm.excluded_sale_ids = meta["excluded_sale_ids"].get<std::vector<std::string>>();

  CsvReader r(csv_path);
  std::vector<std::string> expect = kMatrixMetaColumns;
  for (const auto& c : fm.schema.columns) expect.push_back(c);
  if (r.header() != expect) fail(Errc::schema, "feature matrix header does not match sidecar schema");
  const std::size_t width = fm.schema.width();
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != expect.size()) fail(Errc::schema, "bad feature row in " + csv_path);
    fm.sale_id.push_back(f[0]);
    auto lp = parse_double(f[1]);
    auto q = parse_int(f[2]);
    if (!lp || !q) fail(Errc::schema, "bad feature row in " + csv_path);
    fm.y.push_back(*lp);
    fm.quarter.push_back(static_cast<int>(*q));
    fm.tract_id.push_back(f[3]);
    fm.zipcode_id.push_back(f[4]);
    fm.district_id.push_back(f[5]);
    for (std::size_t j = 0; j < width; ++j) {
      auto v = parse_double(f[6 + j]);
      if (!v) fail(Errc::schema, "bad feature value in " + csv_path);
      fm.x.push_back(*v);
    }
  }
  fm.n = fm.y.size();
  if (fm.n != meta.at("rows").get<std::size_t>()) fail(Errc::schema, "feature row count does not match sidecar");
  if (meta.contains("raw_counts")) {
    fm.raw_counts.assign(fm.n, {});
    for (std::size_t k = 0; k < kNumDatasetKinds; ++k) {
      const auto key = std::string(to_string(static_cast<DatasetKind>(k)));
      if (!meta["raw_counts"].contains(key)) continue;
      const auto& arr = meta["raw_counts"][key];
      if (arr.size() != fm.n) fail(Errc::schema, "raw_counts length mismatch in sidecar");
      for (std::size_t i = 0; i < fm.n; ++i) fm.raw_counts[i][k] = arr[i].get<std::uint32_t>();
    }
  }
  return fm;
}

// --- group activity profiles (aggregate event behavior per group) ---

struct GroupProfile {
  std::string group;
  std::size_t count = 0;
  std::vector<double> category_shares;
  std::array<double, kTimelineBins> timeline_shares{};
};

// Events CSV must carry a group column; rows with an empty group are skipped.
// Timestamps may be epoch seconds (normalized files) or civil datetimes (raw
// files); categories may be names or table indexes.
inline std::vector<GroupProfile> profile_events(const std::string& events_csv, const std::string& group_column,
                                                DatasetKind kind, const IngestConfig& cfg) {
  CsvReader r(events_csv);
  const std::size_t c_t = r.column("timestamp");
  const std::size_t c_cat = r.column("category");
  const std::size_t c_grp = r.column(group_column);
  const CategoryTable& table = cfg.categories(kind);

  struct Acc {
    std::size_t count = 0;
    std::vector<double> cat;
    std::array<double, kTimelineBins> tl{};
  };
  std::map<std::string, Acc> acc;  // ordered: output sorted by group id
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != r.header().size()) continue;
    if (f[c_grp].empty()) continue;
    auto t = parse_int(f[c_t]);
    if (!t) t = parse_timestamp(f[c_t]);
    if (!t) continue;
    std::uint16_t cat = 0;
    if (kind == DatasetKind::complaint311 || kind == DatasetKind::crime) {
      auto it = table.index.find(f[c_cat]);
      if (it != table.index.end()) {
        cat = it->second;
      } else {
        auto idx = parse_int(f[c_cat]);
        if (!idx || *idx < 0 || *idx >= static_cast<long long>(table.size())) continue;
        cat = static_cast<std::uint16_t>(*idx);
      }
    }
    Acc& a = acc[f[c_grp]];
    if (a.cat.empty()) a.cat.assign(table.size(), 0.0);
    ++a.count;
    a.cat[cat] += 1.0;
    a.tl[timeline_bin(*t)] += 1.0;
  }

  std::vector<GroupProfile> out;
  for (auto& [g, a] : acc) {
    GroupProfile p;
    p.group = g;
    p.count = a.count;
    p.category_shares = normalize_counts(a.cat);
    std::vector<double> tl(a.tl.begin(), a.tl.end());
    auto shares = normalize_counts(tl);
    std::copy(shares.begin(), shares.end(), p.timeline_shares.begin());
    out.push_back(std::move(p));
  }
  return out;
}

inline void write_profiles(const std::string& path, const std::vector<GroupProfile>& profiles,
                           const CategoryTable& table) {
  CsvWriter w(path);
  std::vector<std::string> header = {"group", "count"};
  for (const auto& c : table.names) header.push_back("share_" + c);
  char buf[16];
  for (int b = 0; b < static_cast<int>(kTimelineBins); ++b) {
    std::snprintf(buf, sizeof buf, "tl_%02d", b);
    header.emplace_back(buf);
  }
  w.write_row(header);
  std::vector<std::string> f;
  for (const auto& p : profiles) {
    f.clear();
    f.push_back(p.group);
    f.push_back(std::to_string(p.count));
    for (double v : p.category_shares) f.push_back(fmt_double(v));
    for (double v : p.timeline_shares) f.push_back(fmt_double(v));
    w.write_row(f);
  }
}

}  // namespace hpm
