#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hpm/csv.hpp"
#include "hpm/error.hpp"
#include "hpm/time.hpp"
#include "hpm/types.hpp"

namespace hpm {

using json = nlohmann::json;

inline const std::array<std::string, kNumAcsVars> kAcsNames = {
    "acs_pop_density", "acs_unemployment", "acs_median_income", "acs_poverty_rate", "acs_bachelor",
    "acs_graduate",    "acs_white",        "acs_black",         "acs_asian"};
// Ratio-typed ACS variables must lie in [0,1].
inline const std::array<bool, kNumAcsVars> kAcsIsRatio = {false, true, false, true, true, true, true, true, true};
inline const std::array<std::string, kNumLehdVars> kLehdNames = {"lehd_home_workers", "lehd_work_workers"};

inline std::vector<std::string> default_category_names(std::string_view prefix, std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%03zu", std::string(prefix).c_str(), i);
    names.emplace_back(buf);
  }
  return names;
}

enum class PropertyKeyMode { bbl_units, bbl_only };

struct AggregationConfig {
  double radius_m = 1000.0;
  int window_days = 365;
  std::string window_mode = "before";       // "before" | "centered"
  std::string volume_transform = "log1p";   // "log1p" | "raw"
};

// Column mappings, study window, coordinate handling and category tables.
// A JSON config file overrides any subset of the defaults.
struct IngestConfig {
  StudyWindow window;
  std::string coords = "planar";  // "planar" | "lonlat"
  double center_lon = -73.98, center_lat = 40.75;
  double trim_fraction = 0.01;
  PropertyKeyMode key_mode = PropertyKeyMode::bbl_units;
  AggregationConfig aggregation;

  std::map<std::string, std::string> sales_cols = {{"bbl", "bbl"},
                                                   {"sale_price", "sale_price"},
                                                   {"sale_date", "sale_date"},
                                                   {"unit_count", "unit_count"},
                                                   {"residential_flag", "residential_flag"}};
  std::map<std::string, std::string> pluto_cols = {{"bbl", "bbl"},       {"x", "x"},
                                                   {"y", "y"},           {"tract", "tract_id"},
                                                   {"zipcode", "zipcode_id"}, {"district", "district_id"},
                                                   {"characteristic_prefix", "c_"}};
  std::map<std::string, std::string> event_cols = {
      {"timestamp", "timestamp"}, {"x", "x"}, {"y", "y"}, {"category", "category"}};
  std::map<std::string, std::string> taxi_cols = {{"pickup_timestamp", "pickup_timestamp"},
                                                  {"pickup_x", "pickup_x"},
                                                  {"pickup_y", "pickup_y"},
                                                  {"dropoff_timestamp", "dropoff_timestamp"},
                                                  {"dropoff_x", "dropoff_x"},
                                                  {"dropoff_y", "dropoff_y"}};
  std::map<std::string, std::string> census_cols = {
      {"tract", "tract_id"}, {"year", "year"}, {"acs_prefix", "acs_"}, {"lehd_prefix", "lehd_"}};

  CategoryTable categories311 = CategoryTable::from_names(default_category_names("cat311_", 120));
  CategoryTable categories_crime = CategoryTable::from_names(default_category_names("crime_", 48));

  const CategoryTable& categories(DatasetKind k) const {
    switch (k) {
      case DatasetKind::complaint311: return categories311;
      case DatasetKind::crime: return categories_crime;
      default: {
        static const CategoryTable taxi = CategoryTable::taxi();
        return taxi;
      }
    }
  }

  // Equirectangular projection to planar meters around the study center.
  std::pair<double, double> to_planar(double lon_or_x, double lat_or_y) const {
    if (coords == "planar") return {lon_or_x, lat_or_y};
    constexpr double kEarthRadius = 6371000.0;
    const double deg = std::numbers::pi / 180.0;
    const double x = kEarthRadius * std::cos(center_lat * deg) * (lon_or_x - center_lon) * deg;
    const double y = kEarthRadius * (lat_or_y - center_lat) * deg;
    return {x, y};
  }

  static IngestConfig from_json(const json& j) {
    IngestConfig c;
    if (j.contains("study_window")) {
      auto s = parse_date(j["study_window"].value("start", "2010-01-01"));
      auto e = parse_date(j["study_window"].value("end", "2015-12-31"));
      if (!s || !e || !(*s <= *e)) fail(Errc::schema, "invalid study_window in config");
      c.window = StudyWindow{*s, *e};
    }
    c.coords = j.value("coords", c.coords);
    if (c.coords != "planar" && c.coords != "lonlat") fail(Errc::schema, "coords must be planar or lonlat");
    if (j.contains("projection_center")) {
      c.center_lon = j["projection_center"].at(0).get<double>();
      c.center_lat = j["projection_center"].at(1).get<double>();
    }
    c.trim_fraction = j.value("trim_fraction", c.trim_fraction);
    if (c.trim_fraction < 0.0 || c.trim_fraction >= 0.5) fail(Errc::schema, "trim_fraction out of range");
    const std::string key_mode = j.value("property_key", "bbl_units");
    if (key_mode == "bbl_units") c.key_mode = PropertyKeyMode::bbl_units;
    else if (key_mode == "bbl") c.key_mode = PropertyKeyMode::bbl_only;
    else fail(Errc::schema, "property_key must be bbl_units or bbl");
    if (j.contains("aggregation")) {
      const auto& a = j["aggregation"];
      c.aggregation.radius_m = a.value("radius_m", c.aggregation.radius_m);
      c.aggregation.window_days = a.value("window_days", c.aggregation.window_days);
      c.aggregation.window_mode = a.value("window_mode", c.aggregation.window_mode);
      if (c.aggregation.window_mode != "before" && c.aggregation.window_mode != "centered")
        fail(Errc::schema, "window_mode must be before or centered");
      c.aggregation.volume_transform = a.value("volume_transform", c.aggregation.volume_transform);
      if (c.aggregation.volume_transform != "log1p" && c.aggregation.volume_transform != "raw")
        fail(Errc::schema, "volume_transform must be log1p or raw");
      if (c.aggregation.radius_m <= 0 || c.aggregation.window_days <= 0)
        fail(Errc::schema, "aggregation radius/window must be positive");
    }
    auto merge = [](std::map<std::string, std::string>& dst, const json& src) {
      for (auto it = src.begin(); it != src.end(); ++it) dst[it.key()] = it.value().get<std::string>();
    };
    if (j.contains("columns")) {
      const auto& cols = j["columns"];
      if (cols.contains("sales")) merge(c.sales_cols, cols["sales"]);
      if (cols.contains("pluto")) merge(c.pluto_cols, cols["pluto"]);
      if (cols.contains("events")) merge(c.event_cols, cols["events"]);
      if (cols.contains("taxi")) merge(c.taxi_cols, cols["taxi"]);
      if (cols.contains("census")) merge(c.census_cols, cols["census"]);
    }
    if (j.contains("categories")) {
      const auto& cat = j["categories"];
      if (cat.contains("311")) c.categories311 = CategoryTable::from_names(cat["311"].get<std::vector<std::string>>());
      if (cat.contains("crime"))
        c.categories_crime = CategoryTable::from_names(cat["crime"].get<std::vector<std::string>>());
    }
    return c;
  }

  static IngestConfig load(const std::string& path) {
    if (path.empty()) return IngestConfig{};
    std::ifstream in(path);
    if (!in) fail(Errc::io, "missing config file: " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      fail(Errc::schema, "config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
  }
};

// --- property attribute table (PLUTO-like) ---

struct PropertyInfo {
  double x = 0.0, y = 0.0;
  std::string tract_id, zipcode_id, district_id;
  std::vector<double> characteristics;
};

struct PropertyTable {
  std::unordered_map<std::string, PropertyInfo> by_bbl;
  std::vector<RowError> errors;
};

inline std::string characteristic_column(const std::string& prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix.c_str(), i);
  return buf;
}

inline PropertyTable parse_properties(const std::string& path, const IngestConfig& cfg) {
  CsvReader r(path);
  const auto& m = cfg.pluto_cols;
  const std::size_t c_bbl = r.column(m.at("bbl"));
  const std::size_t c_x = r.column(m.at("x"));
  const std::size_t c_y = r.column(m.at("y"));
  const std::size_t c_tract = r.column(m.at("tract"));
  const std::size_t c_zip = r.column(m.at("zipcode"));
  const std::size_t c_dist = r.column(m.at("district"));
  std::array<std::size_t, kNumCharacteristics> c_chars{};
  for (int i = 0; i < kNumCharacteristics; ++i)
    c_chars[i] = r.column(characteristic_column(m.at("characteristic_prefix"), i));

  PropertyTable table;
  std::vector<std::string> f;
  while (r.next(f)) {
    const std::size_t row = r.row_number();
    if (f.size() != r.header().size()) {
      table.errors.push_back({row, "field count mismatch"});
      continue;
    }
    PropertyInfo p;
    auto x = parse_double(f[c_x]);
    auto y = parse_double(f[c_y]);
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
      table.errors.push_back({row, "bad coordinates"});
      continue;
    }
    std::tie(p.x, p.y) = cfg.to_planar(*x, *y);
    p.tract_id = f[c_tract];
    p.zipcode_id = f[c_zip];
    p.district_id = f[c_dist];
    if (p.tract_id.empty() || p.zipcode_id.empty() || p.district_id.empty()) {
      table.errors.push_back({row, "missing group key"});
      continue;
    }
    p.characteristics.resize(kNumCharacteristics);
    bool ok = true;
    for (int i = 0; i < kNumCharacteristics; ++i) {
      auto v = parse_double(f[c_chars[i]]);
      if (!v || !std::isfinite(*v)) {
        ok = false;
        break;
      }
      p.characteristics[i] = *v;
    }
    if (!ok) {
      table.errors.push_back({row, "bad characteristic value"});
      continue;
    }
    if (f[c_bbl].empty()) {
      table.errors.push_back({row, "empty bbl"});
      continue;
    }
    table.by_bbl[f[c_bbl]] = std::move(p);
  }
  return table;
}

// --- sales ---

struct ParsedSales {
  std::vector<RawSaleRecord> records;
  std::vector<RowError> errors;
};

inline ParsedSales parse_sales(const std::string& path, const IngestConfig& cfg) {
  CsvReader r(path);
  const auto& m = cfg.sales_cols;
  const std::size_t c_bbl = r.column(m.at("bbl"));
  const std::size_t c_price = r.column(m.at("sale_price"));
  const std::size_t c_date = r.column(m.at("sale_date"));
  const std::size_t c_units = r.column(m.at("unit_count"));
  const std::size_t c_resid = r.column(m.at("residential_flag"));

  ParsedSales out;
  std::vector<std::string> f;
  while (r.next(f)) {
    const std::size_t row = r.row_number();
    if (f.size() != r.header().size()) {
      out.errors.push_back({row, "field count mismatch"});
      continue;
    }
    RawSaleRecord rec;
    rec.bbl = f[c_bbl];
    if (rec.bbl.empty()) {
      out.errors.push_back({row, "empty bbl"});
      continue;
    }
    auto price = parse_double(f[c_price]);
    if (!price || !std::isfinite(*price)) {
      out.errors.push_back({row, "unparseable price: '" + f[c_price] + "'"});
      continue;
    }
    rec.sale_price = *price;
    auto date = parse_date(f[c_date]);
    if (!date) {
      out.errors.push_back({row, "unparseable date: '" + f[c_date] + "'"});
      continue;
    }
    if (!cfg.window.contains(*date)) {
      out.errors.push_back({row, "sale_date outside study window: " + f[c_date]});
      continue;
    }
    rec.sale_date = *date;
    auto units = parse_int(f[c_units]);
    if (!units || *units <= 0) {
      out.errors.push_back({row, "unit_count not a positive integer: '" + f[c_units] + "'"});
      continue;
    }
    rec.unit_count = static_cast<int>(*units);
    const std::string& rf = f[c_resid];
    if (rf == "1" || rf == "true") rec.residential = true;
    else if (rf == "0" || rf == "false") rec.residential = false;
    else {
      out.errors.push_back({row, "unparseable residential_flag: '" + rf + "'"});
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

inline std::string make_property_key(const RawSaleRecord& r, PropertyKeyMode mode) {
  if (mode == PropertyKeyMode::bbl_only) return r.bbl;
  return r.bbl + "|" + std::to_string(r.unit_count);
}

// Cleaning order: non-residential, then non-positive price, then unmatched
// bbl, then per-unit price and the two-sided percentile trim (post-filter
// population, nearest-rank with stable tie order).
inline std::pair<std::vector<SaleRecord>, CleaningReport> clean_sales(const std::vector<RawSaleRecord>& raw,
                                                                      const PropertyTable& props,
                                                                      const IngestConfig& cfg) {
  CleaningReport rep;
  rep.input_count = raw.size();
  std::vector<SaleRecord> kept;
  std::vector<const RawSaleRecord*> kept_raw;
  kept.reserve(raw.size());
  for (const auto& r : raw) {
    if (!r.residential) {
      ++rep.nonresidential_removed;
      continue;
    }
    if (r.sale_price <= 0.0) {
      ++rep.zero_price_removed;
      continue;
    }
    auto it = props.by_bbl.find(r.bbl);
    if (it == props.by_bbl.end()) {
      ++rep.unmatched_bbl_removed;
      continue;
    }
    const PropertyInfo& p = it->second;
    SaleRecord s;
    s.property_key = make_property_key(r, cfg.key_mode);
    s.price_per_unit = r.sale_price / static_cast<double>(r.unit_count);
    s.log_price = std::log(s.price_per_unit);
    s.sale_date = r.sale_date;
    s.quarter = cfg.window.quarter_index(r.sale_date);
    s.x = p.x;
    s.y = p.y;
    s.tract_id = p.tract_id;
    s.zipcode_id = p.zipcode_id;
    s.district_id = p.district_id;
    s.characteristics = p.characteristics;
    kept.push_back(std::move(s));
    kept_raw.push_back(&r);
  }

  const std::size_t n = kept.size();
  const std::size_t k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.trim_fraction));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return kept[a].price_per_unit < kept[b].price_per_unit; });
  std::vector<char> drop(n, 0);
  for (std::size_t i = 0; i < k; ++i) {
    drop[order[i]] = 1;
    drop[order[n - 1 - i]] = 1;
  }

  std::vector<SaleRecord> out;
  out.reserve(n - 2 * k);
  std::unordered_map<std::string, int> seq;
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i]) {
      ++rep.tail_trimmed;
      continue;
    }
    SaleRecord s = std::move(kept[i]);
    const int occ = seq[s.property_key]++;
    s.sale_id = kept_raw[i]->bbl + "|" + std::to_string(kept_raw[i]->unit_count) + "|" + std::to_string(occ);
    out.push_back(std::move(s));
  }
  rep.output_count = out.size();
  return {std::move(out), rep};
}

// --- events ---

struct EventDropReport {
  std::size_t parsed = 0;
  std::size_t unknown_category = 0;
  std::size_t bad_coordinate = 0;
  std::size_t bad_timestamp = 0;
  std::size_t malformed = 0;

  json to_json() const {
    return json{{"parsed", parsed},
                {"unknown_category", unknown_category},
                {"bad_coordinate", bad_coordinate},
                {"bad_timestamp", bad_timestamp},
                {"malformed", malformed}};
  }
};

struct ParsedEvents {
  std::vector<EventRecord> events;
  EventDropReport report;
};

// 311/crime files carry one event per row; taxi files carry one trip per row
// and emit a pickup and a dropoff record, each validated independently.
inline ParsedEvents parse_events(const std::string& path, DatasetKind kind, const IngestConfig& cfg) {
  ParsedEvents out;
  if (kind == DatasetKind::taxi_pickup || kind == DatasetKind::taxi_dropoff) {
    CsvReader r(path);
    const auto& m = cfg.taxi_cols;
    struct End {
      std::size_t c_t, c_x, c_y;
      DatasetKind kind;
    };
    const End ends[2] = {{r.column(m.at("pickup_timestamp")), r.column(m.at("pickup_x")), r.column(m.at("pickup_y")),
                          DatasetKind::taxi_pickup},
                         {r.column(m.at("dropoff_timestamp")), r.column(m.at("dropoff_x")),
                          r.column(m.at("dropoff_y")), DatasetKind::taxi_dropoff}};
    std::vector<std::string> f;
    while (r.next(f)) {
      if (f.size() != r.header().size()) {
        out.report.malformed += 2;
        continue;
      }
      for (const End& e : ends) {
        auto t = parse_timestamp(f[e.c_t]);
        if (!t) {
          ++out.report.bad_timestamp;
          continue;
        }
        auto x = parse_double(f[e.c_x]);
        auto y = parse_double(f[e.c_y]);
        if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
          ++out.report.bad_coordinate;
          continue;
        }
        auto [px, py] = cfg.to_planar(*x, *y);
        out.events.push_back(EventRecord{*t, px, py, kTaxiCategory, e.kind});
        ++out.report.parsed;
      }
    }
    return out;
  }

  CsvReader r(path);
  const auto& m = cfg.event_cols;
  const std::size_t c_t = r.column(m.at("timestamp"));
  const std::size_t c_x = r.column(m.at("x"));
  const std::size_t c_y = r.column(m.at("y"));
  const std::size_t c_cat = r.column(m.at("category"));
  const CategoryTable& table = cfg.categories(kind);
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != r.header().size()) {
      ++out.report.malformed;
      continue;
    }
    auto t = parse_timestamp(f[c_t]);
    if (!t) {
      ++out.report.bad_timestamp;
      continue;
    }
    auto x = parse_double(f[c_x]);
    auto y = parse_double(f[c_y]);
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
      ++out.report.bad_coordinate;
      continue;
    }
    auto it = table.index.find(f[c_cat]);
    if (it == table.index.end()) {
      ++out.report.unknown_category;
      continue;
    }
    auto [px, py] = cfg.to_planar(*x, *y);
    out.events.push_back(EventRecord{*t, px, py, it->second, kind});
    ++out.report.parsed;
  }
  return out;
}

// Normalized event file: already projected, categories as indices.
inline void write_events_csv(const std::string& path, const std::vector<EventRecord>& events) {
  CsvWriter w(path);
  w.write_row({"timestamp", "x", "y", "category", "kind"});
  for (const auto& e : events) {
    w.write_row({std::to_string(e.timestamp), fmt_double(e.x), fmt_double(e.y), std::to_string(e.category),
                 std::string(to_string(e.kind))});
  }
}

inline std::vector<EventRecord> read_events_csv(const std::string& path) {
  CsvReader r(path);
  const std::size_t c_t = r.column("timestamp");
  const std::size_t c_x = r.column("x");
  const std::size_t c_y = r.column("y");
  const std::size_t c_cat = r.column("category");
  const std::size_t c_kind = r.column("kind");
  std::vector<EventRecord> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    auto t = parse_int(f[c_t]);
    auto x = parse_double(f[c_x]);
    auto y = parse_double(f[c_y]);
    auto cat = parse_int(f[c_cat]);
    if (!t || !x || !y || !cat) fail(Errc::schema, "bad normalized event row in " + path);
    out.push_back(EventRecord{*t, *x, *y, static_cast<std::uint16_t>(*cat), parse_dataset_kind(f[c_kind])});
  }
  return out;
}

// --- tract census ---

struct CensusTable {
  std::vector<TractCensus> rows;
  std::unordered_map<std::string, std::vector<std::size_t>> by_tract;  // row ids sorted by year
  std::vector<RowError> errors;

  void build_lookup() {
    by_tract.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) by_tract[rows[i].tract_id].push_back(i);
    for (auto& [k, v] : by_tract)
      std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) { return rows[a].year < rows[b].year; });
  }

  // Latest census year <= sale year.
  const TractCensus* lookup(const std::string& tract, int year) const {
    auto it = by_tract.find(tract);
    if (it == by_tract.end()) return nullptr;
    const TractCensus* best = nullptr;
    for (std::size_t i : it->second) {
      if (rows[i].year <= year) best = &rows[i];
      else break;
    }
    return best;
  }
};

inline CensusTable parse_census(const std::string& path, const IngestConfig& cfg) {
  CsvReader r(path);
  const auto& m = cfg.census_cols;
  const std::size_t c_tract = r.column(m.at("tract"));
  const std::size_t c_year = r.column(m.at("year"));
  std::array<std::size_t, kNumAcsVars> c_acs{};
  std::array<std::size_t, kNumLehdVars> c_lehd{};
  for (std::size_t i = 0; i < kNumAcsVars; ++i)
    c_acs[i] = r.column(m.at("acs_prefix") + std::to_string(i));
  for (std::size_t i = 0; i < kNumLehdVars; ++i)
    c_lehd[i] = r.column(m.at("lehd_prefix") + std::to_string(i));

  CensusTable table;
  std::vector<std::string> f;
  while (r.next(f)) {
    const std::size_t row = r.row_number();
    if (f.size() != r.header().size()) {
      table.errors.push_back({row, "field count mismatch"});
      continue;
    }
    TractCensus t;
    t.tract_id = f[c_tract];
    auto year = parse_int(f[c_year]);
    if (t.tract_id.empty() || !year) {
      table.errors.push_back({row, "bad tract/year"});
      continue;
    }
    t.year = static_cast<int>(*year);
    bool ok = true;
    for (std::size_t i = 0; i < kNumAcsVars && ok; ++i) {
      auto v = parse_double(f[c_acs[i]]);
      if (!v || !std::isfinite(*v) || (kAcsIsRatio[i] && (*v < 0.0 || *v > 1.0))) ok = false;
      else t.acs[i] = *v;
    }
    for (std::size_t i = 0; i < kNumLehdVars && ok; ++i) {
      auto v = parse_double(f[c_lehd[i]]);
      if (!v || !std::isfinite(*v)) ok = false;
      else t.lehd[i] = *v;
    }
    if (!ok) {
      table.errors.push_back({row, "bad census value"});
      continue;
    }
    table.rows.push_back(std::move(t));
  }
  table.build_lookup();
  return table;
}

struct TcJoin {
  std::vector<std::array<double, kNumAcsVars + kNumLehdVars>> values;  // per sale
  std::vector<char> missing;                                          // per sale
  std::size_t missing_count = 0;
};

// Joins the sale's tract to the latest census year <= the sale year.
// Unmatched sales are flagged, not dropped; models that consume the TC block
// exclude them downstream.
inline TcJoin join_tract_census(const std::vector<SaleRecord>& sales, const CensusTable& census) {
  TcJoin join;
  join.values.resize(sales.size());
  join.missing.resize(sales.size(), 0);
  for (std::size_t i = 0; i < sales.size(); ++i) {
    const TractCensus* t = census.lookup(sales[i].tract_id, sales[i].sale_date.year);
    if (t == nullptr) {
      join.missing[i] = 1;
      ++join.missing_count;
      join.values[i].fill(0.0);
      continue;
    }
    for (std::size_t k = 0; k < kNumAcsVars; ++k) join.values[i][k] = t->acs[k];
    for (std::size_t k = 0; k < kNumLehdVars; ++k) join.values[i][kNumAcsVars + k] = t->lehd[k];
  }
  return join;
}

// --- cleaned sales file (fixed column order) ---

inline std::vector<std::string> cleaned_sales_header() {
  std::vector<std::string> h = {"sale_id", "price_per_unit", "log_price",  "sale_date",  "quarter",
                                "x",       "y",              "tract_id",   "zipcode_id", "district_id"};
  for (int i = 0; i < kNumCharacteristics; ++i) h.push_back(characteristic_column("c_", i));
  return h;
}

inline void write_cleaned_sales(const std::string& path, const std::vector<SaleRecord>& sales) {
  CsvWriter w(path);
  w.write_row(cleaned_sales_header());
  std::vector<std::string> f;
  for (const auto& s : sales) {
    f.clear();
    f.push_back(s.sale_id);
    f.push_back(fmt_double(s.price_per_unit));
    f.push_back(fmt_double(s.log_price));
    f.push_back(format_date(s.sale_date));
    f.push_back(std::to_string(s.quarter));
    f.push_back(fmt_double(s.x));
    f.push_back(fmt_double(s.y));
    f.push_back(s.tract_id);
    f.push_back(s.zipcode_id);
    f.push_back(s.district_id);
    for (double c : s.characteristics) f.push_back(fmt_double(c));
    w.write_row(f);
  }
}

inline std::vector<SaleRecord> read_cleaned_sales(const std::string& path, PropertyKeyMode key_mode = PropertyKeyMode::bbl_units) {
  CsvReader r(path);
  const auto expect = cleaned_sales_header();
  if (r.header() != expect) fail(Errc::schema, "unexpected cleaned-sales header in " + path);
  std::vector<SaleRecord> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != expect.size()) fail(Errc::schema, "bad cleaned-sales row in " + path);
    SaleRecord s;
    s.sale_id = f[0];
    // sale_id is "<bbl>|<units>|<seq>"
    const auto last = s.sale_id.rfind('|');
    std::string base = last == std::string::npos ? s.sale_id : s.sale_id.substr(0, last);
    if (key_mode == PropertyKeyMode::bbl_only) {
      const auto first = base.find('|');
      if (first != std::string::npos) base = base.substr(0, first);
    }
    s.property_key = base;
    auto ppu = parse_double(f[1]);
    auto lp = parse_double(f[2]);
    auto date = parse_date(f[3]);
    auto q = parse_int(f[4]);
    auto x = parse_double(f[5]);
    auto y = parse_double(f[6]);
    if (!ppu || !lp || !date || !q || !x || !y) fail(Errc::schema, "bad cleaned-sales row in " + path);
    s.price_per_unit = *ppu;
    s.log_price = *lp;
    s.sale_date = *date;
    s.quarter = static_cast<int>(*q);
    s.x = *x;
    s.y = *y;
    s.tract_id = f[7];
    s.zipcode_id = f[8];
    s.district_id = f[9];
    s.characteristics.resize(kNumCharacteristics);
    for (int i = 0; i < kNumCharacteristics; ++i) {
      auto v = parse_double(f[10 + i]);
      if (!v) fail(Errc::schema, "bad characteristic in " + path);
      s.characteristics[i] = *v;
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline json cleaning_report_json(const CleaningReport& rep) {
  return json{{"input_count", rep.input_count},
              {"nonresidential_removed", rep.nonresidential_removed},
              {"zero_price_removed", rep.zero_price_removed},
              {"unmatched_bbl_removed", rep.unmatched_bbl_removed},
              {"tail_trimmed", rep.tail_trimmed},
              {"output_count", rep.output_count}};
}

inline json row_errors_json(const std::vector<RowError>& errors) {
  json arr = json::array();
  for (const auto& e : errors) arr.push_back(json{{"row", e.row}, {"message", e.message}});
  return arr;
}

}  // namespace hpm
