#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpm/csv.hpp"
#include "hpm/error.hpp"
#include "hpm/ingest.hpp"
#include "hpm/rng.hpp"
#include "hpm/time.hpp"
#include "hpm/types.hpp"

namespace hpm {

// Synthetic-city generator: a square tract grid with smooth spatial fields
// driving event intensity, demographics, and prices, so the downstream
// pipeline has known planted structure to recover. Regeneration from the same
// config is byte-identical.
struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t n_sales = 2000;          // primary sales, one property each
  std::size_t events_per_kind = 20000; // 311 and crime events; taxi trips
  double beta_dc = 0.6;                // price loading on event exposure
  double beta_tc = 0.3;                // price loading on the demographic field
  double sigma = 0.25;                 // sale-level noise
  double sigma_tract = 0.15;           // tract-level idiosyncratic noise
  double repeat_fraction = 0.15;       // share of properties that sell twice
  double sigma_repeat = 0.05;          // noise on the second sale's log price
  double trim_fraction = 0.01;         // emitted into the ingest config
  int grid = 10;                       // tracts per side
  double spacing_m = 800.0;            // tract cell edge
  StudyWindow window;
  // junk rows exercising the cleaning stages
  double frac_nonresidential = 0.02;
  double frac_zero_price = 0.01;
  std::size_t n_unmatched = 3;
  std::size_t n_malformed = 2;
  std::size_t n_out_of_window = 2;

  void validate() const {
    if (n_sales < 1) fail(Errc::usage, "n_sales must be positive");
    if (grid < 2) fail(Errc::usage, "grid must be at least 2");
    if (spacing_m <= 0) fail(Errc::usage, "spacing_m must be positive");
    if (repeat_fraction < 0 || repeat_fraction > 1) fail(Errc::usage, "repeat_fraction must be in [0, 1]");
    if (sigma < 0 || sigma_repeat < 0 || sigma_tract < 0) fail(Errc::usage, "noise scales must be nonnegative");
    if (trim_fraction < 0 || trim_fraction >= 0.5) fail(Errc::usage, "trim_fraction must be in [0, 0.5)");
    if (frac_nonresidential < 0 || frac_zero_price < 0) fail(Errc::usage, "junk fractions must be nonnegative");
  }

  static SynthConfig from_json(const json& j) {
    SynthConfig c;
    c.seed = j.value("seed", c.seed);
    c.n_sales = j.value("n_sales", c.n_sales);
    c.events_per_kind = j.value("events_per_kind", c.events_per_kind);
    c.beta_dc = j.value("beta_dc", c.beta_dc);
    c.beta_tc = j.value("beta_tc", c.beta_tc);
    c.sigma = j.value("sigma", c.sigma);
    c.sigma_tract = j.value("sigma_tract", c.sigma_tract);
    c.repeat_fraction = j.value("repeat_fraction", c.repeat_fraction);
    c.sigma_repeat = j.value("sigma_repeat", c.sigma_repeat);
    c.trim_fraction = j.value("trim_fraction", c.trim_fraction);
    c.grid = j.value("grid", c.grid);
    c.spacing_m = j.value("spacing_m", c.spacing_m);
    if (j.contains("study_window")) {
      auto s = parse_date(j["study_window"].value("start", "2010-01-01"));
      auto e = parse_date(j["study_window"].value("end", "2015-12-31"));
      if (!s || !e || !(*s <= *e)) fail(Errc::schema, "invalid study_window in synth config");
      c.window = StudyWindow{*s, *e};
    }
    c.frac_nonresidential = j.value("frac_nonresidential", c.frac_nonresidential);
    c.frac_zero_price = j.value("frac_zero_price", c.frac_zero_price);
    c.n_unmatched = j.value("n_unmatched", c.n_unmatched);
    c.n_malformed = j.value("n_malformed", c.n_malformed);
    c.n_out_of_window = j.value("n_out_of_window", c.n_out_of_window);
    c.validate();
    return c;
  }

  json to_json() const {
    return json{{"seed", seed},
                {"n_sales", n_sales},
                {"events_per_kind", events_per_kind},
                {"beta_dc", beta_dc},
                {"beta_tc", beta_tc},
                {"sigma", sigma},
                {"sigma_tract", sigma_tract},
                {"repeat_fraction", repeat_fraction},
                {"sigma_repeat", sigma_repeat},
                {"trim_fraction", trim_fraction},
                {"grid", grid},
                {"spacing_m", spacing_m},
                {"study_window", json{{"start", format_date(window.start)}, {"end", format_date(window.end)}}},
                {"frac_nonresidential", frac_nonresidential},
                {"frac_zero_price", frac_zero_price},
                {"n_unmatched", n_unmatched},
                {"n_malformed", n_malformed},
                {"n_out_of_window", n_out_of_window}};
  }

  static SynthConfig load(const std::string& path) {
    if (path.empty()) return SynthConfig{};
    std::ifstream in(path);
    if (!in) fail(Errc::io, "missing synth config file: " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      fail(Errc::schema, std::string("synth config parse error: ") + e.what());
    }
    return from_json(j);
  }
};

struct SynthTract {
  std::string tract_id, zipcode_id, district_id;
  double cx = 0.0, cy = 0.0;
  double z = 0.0;    // standardized event-exposure signal
  double u = 0.0;    // standardized demographic signal
  double eta = 0.0;  // idiosyncratic tract effect
  std::array<std::size_t, 3> counts{};  // 311, crime, taxi endpoints
  std::array<double, kNumAcsVars + kNumLehdVars> census{};
};

struct SynthProperty {
  std::string bbl;
  std::size_t tract = 0;
  double x = 0.0, y = 0.0;
  int units = 1;
  std::array<double, kNumCharacteristics> chars{};
};

struct SynthTrip {
  std::int64_t t_pickup = 0, t_dropoff = 0;
  double xp = 0.0, yp = 0.0, xd = 0.0, yd = 0.0;
  std::size_t tract_pickup = 0, tract_dropoff = 0;
};

struct SynthCity {
  SynthConfig config;
  std::vector<SynthTract> tracts;
  std::vector<SynthProperty> properties;
  std::vector<SaleRecord> sales;    // honest records; what cleaning should recover up to trimming
  std::vector<EventRecord> events;  // all kinds, taxi as endpoint pairs
  std::vector<std::size_t> event_tract;
  std::vector<SynthTrip> trips;
  std::vector<double> planted_index;  // per quarter, 0 at the base quarter
  std::vector<double> gamma;          // characteristic price weights
  double a0 = 10.0;
  std::size_t n_repeat_pairs = 0;
  std::vector<std::array<std::string, 5>> sales_rows;  // raw CSV rows incl. junk, shuffled
  json truth;

  // In-memory census table matching census.csv.
  CensusTable census_table() const {
    CensusTable t;
    for (const auto& tr : tracts) {
      for (int year = config.window.start.year; year <= config.window.end.year; ++year) {
        TractCensus row;
        row.tract_id = tr.tract_id;
        row.year = year;
        for (std::size_t k = 0; k < kNumAcsVars; ++k) row.acs[k] = tr.census[k];
        for (std::size_t k = 0; k < kNumLehdVars; ++k) row.lehd[k] = tr.census[kNumAcsVars + k];
        t.rows.push_back(std::move(row));
      }
    }
    t.build_lookup();
    return t;
  }
};

namespace detail {

// Smooth random field: a sum of three plane waves with kilometer-scale
// wavelengths. Standardization happens at the point of use.
struct PlaneField {
  struct Wave {
    double kx = 0, ky = 0, phase = 0;
  };
  std::array<Wave, 3> waves;

  static PlaneField random(Rng& rng) {
    PlaneField f;
    for (auto& w : f.waves) {
      const double wavelength = rng.uniform(2500.0, 7000.0);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double k = 2.0 * std::numbers::pi / wavelength;
      w.kx = k * std::cos(angle);
      w.ky = k * std::sin(angle);
      w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return f;
  }

  double operator()(double x, double y) const {
    double v = 0.0;
    for (const auto& w : waves) v += std::sin(w.kx * x + w.ky * y + w.phase);
    return v;
  }
};

inline void standardize(std::vector<double>& v) {
  if (v.empty()) return;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const double sd = std::sqrt(var);
  for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

inline std::size_t draw_cumulative(const std::vector<double>& cum, double u) {
  const double target = u * cum.back();
  std::size_t lo = 0, hi = cum.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (cum[mid] > target) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

// Time-of-day profiles per event family: eight 3-hour bins, weekday and
// weekend variants. Distinct shapes so weekly timelines carry signal.
inline const std::array<double, 8>& bin_weights(DatasetKind kind, bool weekend) {
  static const std::array<double, 8> w311{1, 1, 3, 6, 7, 6, 4, 2};
  static const std::array<double, 8> w311_we{2, 1, 2, 4, 5, 5, 4, 3};
  static const std::array<double, 8> wcrime{6, 4, 2, 2, 3, 4, 6, 8};
  static const std::array<double, 8> wcrime_we{8, 5, 2, 2, 3, 4, 6, 9};
  static const std::array<double, 8> wtaxi{2, 1, 2, 8, 4, 5, 9, 6};
  static const std::array<double, 8> wtaxi_we{4, 2, 1, 3, 4, 5, 7, 6};
  switch (kind) {
    case DatasetKind::complaint311: return weekend ? w311_we : w311;
    case DatasetKind::crime: return weekend ? wcrime_we : wcrime;
    default: return weekend ? wtaxi_we : wtaxi;
  }
}

// Draws an in-window timestamp: uniform day, then a 3-hour bin from the
// kind's weekday profile, then a uniform second within the bin.
inline std::int64_t draw_timestamp(Rng& rng, DatasetKind kind, std::int64_t start_day, std::int64_t num_days) {
  const std::int64_t day = start_day + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(num_days)));
  const int wd = weekday_from_days(day);
  const auto& w = bin_weights(kind, wd >= 5);
  double total = 0.0;
  for (double v : w) total += v;
  double target = rng.uniform() * total;
  int bin = 0;
  for (; bin < 7; ++bin) {
    target -= w[static_cast<std::size_t>(bin)];
    if (target <= 0.0) break;
  }
  const std::int64_t sec = static_cast<std::int64_t>(bin) * 10800 +
                           static_cast<std::int64_t>(rng.uniform_int(10800));
  return day * kSecondsPerDay + sec;
}

}  // namespace detail

// Planted quarterly log index: linear drift plus an oscillation, zero at the
// base quarter.
inline double planted_log_index(int quarter) {
  return 0.02 * quarter + 0.05 * std::sin(2.0 * std::numbers::pi * quarter / 8.0);
}

inline SynthCity generate_city(const SynthConfig& cfg) {
  cfg.validate();
  SynthCity city;
  city.config = cfg;

  const int g = cfg.grid;
  const int gz = (g + 1) / 2;        // zipcode grid side
  const int gd = (gz + 1) / 2;       // district grid side
  const double half = 0.5 * cfg.spacing_m;
  const std::size_t num_tracts = static_cast<std::size_t>(g) * static_cast<std::size_t>(g);

  // Tract lattice centered at the origin; zips and districts nest by halving.
  char buf[32];
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      SynthTract t;
      std::snprintf(buf, sizeof buf, "T%02d%02d", r, c);
      t.tract_id = buf;
      const int zr = r / 2, zc = c / 2;
      std::snprintf(buf, sizeof buf, "Z%02d", zr * gz + zc);
      t.zipcode_id = buf;
      std::snprintf(buf, sizeof buf, "D%02d", (zr / 2) * gd + zc / 2);
      t.district_id = buf;
      t.cx = (c - 0.5 * (g - 1)) * cfg.spacing_m;
      t.cy = (r - 0.5 * (g - 1)) * cfg.spacing_m;
      city.tracts.push_back(std::move(t));
    }
  }

  // Spatial fields. Draw order is fixed; every consumer gets its own stream.
  Rng rng_fields(derive_seed(cfg.seed, 1));
  const auto field_311 = detail::PlaneField::random(rng_fields);
  const auto field_crime = detail::PlaneField::random(rng_fields);
  const auto field_taxi = detail::PlaneField::random(rng_fields);
  const auto field_u = detail::PlaneField::random(rng_fields);
  const auto tilt_311 = detail::PlaneField::random(rng_fields);
  const auto tilt_crime = detail::PlaneField::random(rng_fields);
  for (auto& t : city.tracts) t.eta = cfg.sigma_tract * rng_fields.normal();

  // Events: tract drawn by field-driven intensity, position uniform in the
  // tract cell, category from a rank-decay distribution tilted by a second
  // field so category mixes vary across space.
  const std::int64_t start_day = days_from_civil(cfg.window.start);
  const std::int64_t num_days = days_from_civil(cfg.window.end) - start_day + 1;

  auto tract_weights = [&](const detail::PlaneField& f) {
    std::vector<double> cum(num_tracts);
    double total = 0.0;
    for (std::size_t i = 0; i < num_tracts; ++i) {
      total += std::exp(0.8 * f(city.tracts[i].cx, city.tracts[i].cy));
      cum[i] = total;
    }
    return cum;
  };

  auto category_tables = [&](const detail::PlaneField& tilt, std::size_t ncat) {
    // Per-tract cumulative category weights.
    std::vector<std::vector<double>> cum(num_tracts, std::vector<double>(ncat));
    for (std::size_t i = 0; i < num_tracts; ++i) {
      const double s = std::tanh(tilt(city.tracts[i].cx, city.tracts[i].cy));
      double total = 0.0;
      for (std::size_t c = 0; c < ncat; ++c) {
        const double base = 1.0 / std::pow(static_cast<double>(c + 1), 0.8);
        const double dir = c < ncat / 2 ? 1.0 : -1.0;
        total += base * (1.0 + 0.45 * s * dir);
        cum[i][c] = total;
      }
    }
    return cum;
  };

  auto gen_point_events = [&](DatasetKind kind, const detail::PlaneField& field, const detail::PlaneField& tilt,
                              std::size_t ncat, std::uint64_t stream) {
    Rng rng(derive_seed(cfg.seed, stream));
    const auto tw = tract_weights(field);
    const auto cats = category_tables(tilt, ncat);
    for (std::size_t e = 0; e < cfg.events_per_kind; ++e) {
      const std::size_t ti = detail::draw_cumulative(tw, rng.uniform());
      auto& tract = city.tracts[ti];
      EventRecord ev;
      ev.kind = kind;
      ev.x = tract.cx + rng.uniform(-half, half);
      ev.y = tract.cy + rng.uniform(-half, half);
      ev.timestamp = detail::draw_timestamp(rng, kind, start_day, num_days);
      ev.category = static_cast<std::uint16_t>(detail::draw_cumulative(cats[ti], rng.uniform()));
      city.events.push_back(ev);
      city.event_tract.push_back(ti);
      ++tract.counts[kind == DatasetKind::complaint311 ? 0 : 1];
    }
  };
  gen_point_events(DatasetKind::complaint311, field_311, tilt_311, 120, 2);
  gen_point_events(DatasetKind::crime, field_crime, tilt_crime, 48, 3);

  {
    Rng rng(derive_seed(cfg.seed, 4));
    const auto tw = tract_weights(field_taxi);
    for (std::size_t e = 0; e < cfg.events_per_kind; ++e) {
      SynthTrip trip;
      trip.tract_pickup = detail::draw_cumulative(tw, rng.uniform());
      trip.tract_dropoff = detail::draw_cumulative(tw, rng.uniform());
      const auto& tp = city.tracts[trip.tract_pickup];
      const auto& td = city.tracts[trip.tract_dropoff];
      trip.xp = tp.cx + rng.uniform(-half, half);
      trip.yp = tp.cy + rng.uniform(-half, half);
      trip.xd = td.cx + rng.uniform(-half, half);
      trip.yd = td.cy + rng.uniform(-half, half);
      trip.t_pickup = detail::draw_timestamp(rng, DatasetKind::taxi_pickup, start_day, num_days);
      trip.t_dropoff = trip.t_pickup + 300 + static_cast<std::int64_t>(rng.uniform_int(3300));
      city.events.push_back({trip.t_pickup, trip.xp, trip.yp, kTaxiCategory, DatasetKind::taxi_pickup});
      city.event_tract.push_back(trip.tract_pickup);
      city.events.push_back({trip.t_dropoff, trip.xd, trip.yd, kTaxiCategory, DatasetKind::taxi_dropoff});
      city.event_tract.push_back(trip.tract_dropoff);
      ++city.tracts[trip.tract_pickup].counts[2];
      ++city.tracts[trip.tract_dropoff].counts[2];
      city.trips.push_back(trip);
    }
  }

  // Planted tract signals: z aggregates log event exposure, u is a smooth
  // field; both standardized over tracts.
  {
    std::vector<double> z(num_tracts), u(num_tracts);
    for (std::size_t i = 0; i < num_tracts; ++i) {
      const auto& c = city.tracts[i].counts;
      z[i] = 0.5 * std::log1p(static_cast<double>(c[0])) + 0.3 * std::log1p(static_cast<double>(c[1])) +
             0.2 * std::log1p(static_cast<double>(c[2]));
      u[i] = field_u(city.tracts[i].cx, city.tracts[i].cy);
    }
    detail::standardize(z);
    detail::standardize(u);
    for (std::size_t i = 0; i < num_tracts; ++i) {
      city.tracts[i].z = z[i];
      city.tracts[i].u = u[i];
    }
  }

  // Demographics derived from u: levels on a log scale, shares through a
  // logistic link. Identical across census years.
  auto logistic = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (auto& t : city.tracts) {
    t.census[0] = std::exp(8.0 + 0.5 * t.u);          // population density
    t.census[1] = logistic(-2.0 + 0.6 * t.u);         // unemployment
    t.census[2] = std::exp(10.5 + 0.4 * t.u);         // median income
    t.census[3] = logistic(-1.5 - 0.5 * t.u);         // poverty
    t.census[4] = logistic(-0.5 + 0.7 * t.u);         // bachelor
    t.census[5] = logistic(-1.2 + 0.6 * t.u);         // graduate
    t.census[6] = logistic(0.2 + 0.3 * t.u);          // white
    t.census[7] = logistic(-1.0 - 0.3 * t.u);         // black
    t.census[8] = logistic(-1.5 + 0.2 * t.u);         // asian
    t.census[9] = std::exp(6.0 + 0.3 * t.u);          // home-side workers
    t.census[10] = std::exp(5.5 + 0.5 * t.u);         // work-side workers
  }

  // Properties.
  {
    Rng rng(derive_seed(cfg.seed, 5));
    city.properties.resize(cfg.n_sales);
    for (std::size_t i = 0; i < cfg.n_sales; ++i) {
      auto& p = city.properties[i];
      std::snprintf(buf, sizeof buf, "B%07zu", i);
      p.bbl = buf;
      p.tract = rng.uniform_int(num_tracts);
      const auto& t = city.tracts[p.tract];
      p.x = t.cx + rng.uniform(-half, half);
      p.y = t.cy + rng.uniform(-half, half);
      const double uu = rng.uniform();
      p.units = 1 + static_cast<int>(uu * uu * 6.0);
      for (auto& c : p.chars) c = rng.normal();
    }
  }

  // Characteristic weights: sparse, fixed.
  city.gamma.assign(kNumCharacteristics, 0.0);
  city.gamma[0] = 0.30;
  city.gamma[1] = 0.20;
  city.gamma[2] = -0.15;
  city.gamma[3] = 0.10;
  city.gamma[4] = -0.05;

  const int num_quarters = cfg.window.num_quarters();
  city.planted_index.resize(static_cast<std::size_t>(num_quarters));
  for (int q = 0; q < num_quarters; ++q) city.planted_index[static_cast<std::size_t>(q)] = planted_log_index(q);

  // First-sale dates.
  std::vector<std::int64_t> sale_day(cfg.n_sales);
  {
    Rng rng(derive_seed(cfg.seed, 6));
    for (auto& d : sale_day)
      d = start_day + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(num_days)));
  }

  // Repeat-sale plan. The first pairs form a spine across successive quarters
  // so every quarter is linked to the base; the rest keep their first date
  // and draw a later second date.
  city.n_repeat_pairs = static_cast<std::size_t>(cfg.repeat_fraction * static_cast<double>(cfg.n_sales));
  std::vector<std::size_t> repeat_props;
  std::vector<std::int64_t> second_day(city.n_repeat_pairs, 0);
  Rng rng_repeat(derive_seed(cfg.seed, 7));
  {
    std::vector<std::size_t> perm(cfg.n_sales);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng_repeat.shuffle(perm.begin(), perm.end());
    repeat_props.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(city.n_repeat_pairs));

    auto quarter_days = [&](int q) {
      const int year = cfg.window.start.year + q / 4;
      const int month = (q % 4) * 3 + 1;
      std::int64_t first = days_from_civil({year, month, 1});
      std::int64_t last = month == 10 ? days_from_civil({year + 1, 1, 1}) - 1
                                      : days_from_civil({year, month + 3, 1}) - 1;
      first = std::max(first, start_day);
      last = std::min(last, start_day + num_days - 1);
      return std::pair<std::int64_t, std::int64_t>{first, last};
    };
    const std::size_t spine = std::min<std::size_t>(static_cast<std::size_t>(num_quarters) - 1, repeat_props.size());
    for (std::size_t j = 0; j < repeat_props.size(); ++j) {
      if (j < spine) {
        const auto [f1, l1] = quarter_days(static_cast<int>(j));
        const auto [f2, l2] = quarter_days(static_cast<int>(j) + 1);
        sale_day[repeat_props[j]] =
            f1 + static_cast<std::int64_t>(rng_repeat.uniform_int(static_cast<std::uint64_t>(l1 - f1 + 1)));
        second_day[j] = f2 + static_cast<std::int64_t>(rng_repeat.uniform_int(static_cast<std::uint64_t>(l2 - f2 + 1)));
      } else {
        std::int64_t& d1 = sale_day[repeat_props[j]];
        const std::int64_t end_day = start_day + num_days - 1;
        if (d1 >= end_day) d1 = end_day - 1;
        second_day[j] =
            d1 + 1 + static_cast<std::int64_t>(rng_repeat.uniform_int(static_cast<std::uint64_t>(end_day - d1)));
      }
    }
  }

  // Prices: hedonic equation on the first sale; the second sale moves with
  // the planted index plus repeat noise, so property terms cancel in pairs.
  std::vector<double> log_ppu(cfg.n_sales);
  {
    Rng rng(derive_seed(cfg.seed, 8));
    for (std::size_t i = 0; i < cfg.n_sales; ++i) {
      const auto& p = city.properties[i];
      const auto& t = city.tracts[p.tract];
      const int q = cfg.window.quarter_index(civil_from_days(sale_day[i]));
      double v = city.a0 + planted_log_index(q) + cfg.beta_dc * t.z + cfg.beta_tc * t.u + t.eta + cfg.sigma * rng.normal();
      for (std::size_t j = 0; j < kNumCharacteristics; ++j) v += city.gamma[j] * p.chars[j];
      log_ppu[i] = v;
    }
  }

  auto make_sale = [&](std::size_t prop, std::int64_t day, double lp, int seq) {
    const auto& p = city.properties[prop];
    const auto& t = city.tracts[p.tract];
    SaleRecord s;
    s.sale_id = p.bbl + "|" + std::to_string(p.units) + "|" + std::to_string(seq);
    s.property_key = p.bbl + "|" + std::to_string(p.units);
    s.price_per_unit = std::exp(lp);
    s.log_price = std::log(s.price_per_unit);
    s.sale_date = civil_from_days(day);
    s.quarter = cfg.window.quarter_index(s.sale_date);
    s.x = p.x;
    s.y = p.y;
    s.tract_id = t.tract_id;
    s.zipcode_id = t.zipcode_id;
    s.district_id = t.district_id;
    s.characteristics.assign(p.chars.begin(), p.chars.end());
    return s;
  };

  for (std::size_t i = 0; i < cfg.n_sales; ++i) city.sales.push_back(make_sale(i, sale_day[i], log_ppu[i], 0));
  for (std::size_t j = 0; j < repeat_props.size(); ++j) {
    const std::size_t prop = repeat_props[j];
    const int q1 = cfg.window.quarter_index(civil_from_days(sale_day[prop]));
    const int q2 = cfg.window.quarter_index(civil_from_days(second_day[j]));
    const double lp2 =
        log_ppu[prop] + planted_log_index(q2) - planted_log_index(q1) + cfg.sigma_repeat * rng_repeat.normal();
    city.sales.push_back(make_sale(prop, second_day[j], lp2, 1));
  }

  // Raw sales rows: honest rows plus junk exercising each cleaning stage,
  // then a deterministic shuffle.
  {
    for (const auto& s : city.sales) {
      const std::string bbl = s.property_key.substr(0, s.property_key.find('|'));
      const int units = static_cast<int>(require_int(s.property_key.substr(s.property_key.find('|') + 1), "units"));
      city.sales_rows.push_back({bbl, fmt_double(s.price_per_unit * units), format_date(s.sale_date),
                                 std::to_string(units), "1"});
    }
    Rng rng(derive_seed(cfg.seed, 9));
    const std::size_t n_nonres = static_cast<std::size_t>(cfg.frac_nonresidential * static_cast<double>(cfg.n_sales));
    const std::size_t n_zero = static_cast<std::size_t>(cfg.frac_zero_price * static_cast<double>(cfg.n_sales));
    auto random_prop = [&]() -> const SynthProperty& { return city.properties[rng.uniform_int(cfg.n_sales)]; };
    auto random_date = [&]() {
      return format_date(
          civil_from_days(start_day + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(num_days)))));
    };
    for (std::size_t i = 0; i < n_nonres; ++i) {
      const auto& p = random_prop();
      city.sales_rows.push_back({p.bbl, fmt_double(std::exp(city.a0 + 0.3 * rng.normal()) * p.units), random_date(),
                                 std::to_string(p.units), "0"});
    }
    for (std::size_t i = 0; i < n_zero; ++i) {
      const auto& p = random_prop();
      city.sales_rows.push_back({p.bbl, "0", random_date(), std::to_string(p.units), "1"});
    }
    for (std::size_t i = 0; i < cfg.n_unmatched; ++i)
      city.sales_rows.push_back({"UNMATCHED" + std::to_string(i), fmt_double(std::exp(city.a0)), random_date(), "1", "1"});
    for (std::size_t i = 0; i < cfg.n_malformed; ++i) {
      if (i % 2 == 0) city.sales_rows.push_back({"B0000000", "n/a", random_date(), "1", "1"});
      else city.sales_rows.push_back({"B0000000", fmt_double(std::exp(city.a0)), "2013-42-77", "1", "1"});
    }
    for (std::size_t i = 0; i < cfg.n_out_of_window; ++i) {
      const std::int64_t day = i % 2 == 0 ? start_day - 200 - static_cast<std::int64_t>(i)
                                          : start_day + num_days - 1 + 60 + static_cast<std::int64_t>(i);
      city.sales_rows.push_back(
          {"B0000000", fmt_double(std::exp(city.a0)), format_date(civil_from_days(day)), "1", "1"});
    }
    Rng rng_shuffle(derive_seed(cfg.seed, 10));
    rng_shuffle.shuffle(city.sales_rows.begin(), city.sales_rows.end());

    const std::size_t honest = city.sales.size();
    const std::size_t trimmed = static_cast<std::size_t>(static_cast<double>(honest) * cfg.trim_fraction);
    json tracts_truth = json::array();
    for (const auto& t : city.tracts)
      tracts_truth.push_back(json{{"tract_id", t.tract_id},
                                  {"zipcode_id", t.zipcode_id},
                                  {"district_id", t.district_id},
                                  {"z", t.z},
                                  {"u", t.u},
                                  {"eta", t.eta},
                                  {"count_311", t.counts[0]},
                                  {"count_crime", t.counts[1]},
                                  {"count_taxi_endpoints", t.counts[2]}});
    city.truth = json{
        {"schema_version", 1},
        {"seed", cfg.seed},
        {"a0", city.a0},
        {"beta_dc", cfg.beta_dc},
        {"beta_tc", cfg.beta_tc},
        {"sigma", cfg.sigma},
        {"sigma_tract", cfg.sigma_tract},
        {"sigma_repeat", cfg.sigma_repeat},
        {"gamma", city.gamma},
        {"log_index", city.planted_index},
        {"n_properties", cfg.n_sales},
        {"n_repeat_pairs", city.n_repeat_pairs},
        {"tracts", std::move(tracts_truth)},
        {"cleaning",
         json{{"rows_written", city.sales_rows.size()},
              {"parse_errors", cfg.n_malformed + cfg.n_out_of_window},
              {"parsed_ok", honest + n_nonres + n_zero + cfg.n_unmatched},
              {"dropped_nonresidential", n_nonres},
              {"dropped_nonpositive", n_zero},
              {"dropped_unmatched", cfg.n_unmatched},
              {"trimmed_low", trimmed},
              {"trimmed_high", trimmed},
              {"final_rows", honest - 2 * trimmed}}}};
  }
  return city;
}

// Ingest configuration matching the generated files.
inline json synth_ingest_config(const SynthConfig& cfg) {
  return json{{"study_window", json{{"start", format_date(cfg.window.start)}, {"end", format_date(cfg.window.end)}}},
              {"coords", "planar"},
              {"trim_fraction", cfg.trim_fraction},
              {"property_key", "bbl_units"},
              {"aggregation",
               json{{"radius_m", 1000.0}, {"window_days", 365}, {"window_mode", "before"}, {"volume_transform", "log1p"}}}};
}

inline void write_city(const SynthCity& city, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(Errc::io, "cannot create output directory " + out_dir);
  const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

  {
    CsvWriter w(path("sales.csv"));
    w.write_row({"bbl", "sale_price", "sale_date", "unit_count", "residential_flag"});
    for (const auto& r : city.sales_rows) w.write_row({r[0], r[1], r[2], r[3], r[4]});
  }
  {
    CsvWriter w(path("pluto.csv"));
    std::vector<std::string> header = {"bbl", "x", "y", "tract_id", "zipcode_id", "district_id"};
    for (int i = 0; i < kNumCharacteristics; ++i) header.push_back(characteristic_column("c_", i));
    w.write_row(header);
    std::vector<std::string> f;
    for (const auto& p : city.properties) {
      const auto& t = city.tracts[p.tract];
      f = {p.bbl, fmt_double(p.x), fmt_double(p.y), t.tract_id, t.zipcode_id, t.district_id};
      for (double c : p.chars) f.push_back(fmt_double(c));
      w.write_row(f);
    }
  }
  {
    const auto cat311 = default_category_names("cat311_", 120);
    const auto catcrime = default_category_names("crime_", 48);
    CsvWriter w311(path("311.csv"));
    CsvWriter wcrime(path("crime.csv"));
    w311.write_row({"timestamp", "x", "y", "category", "tract_id"});
    wcrime.write_row({"timestamp", "x", "y", "category", "tract_id"});
    for (std::size_t i = 0; i < city.events.size(); ++i) {
      const auto& e = city.events[i];
      const auto& tract = city.tracts[city.event_tract[i]];
      if (e.kind == DatasetKind::complaint311)
        w311.write_row({format_timestamp(e.timestamp), fmt_double(e.x), fmt_double(e.y), cat311[e.category],
                        tract.tract_id});
      else if (e.kind == DatasetKind::crime)
        wcrime.write_row({format_timestamp(e.timestamp), fmt_double(e.x), fmt_double(e.y), catcrime[e.category],
                          tract.tract_id});
    }
  }
  {
    CsvWriter w(path("taxi.csv"));
    w.write_row({"pickup_timestamp", "pickup_x", "pickup_y", "dropoff_timestamp", "dropoff_x", "dropoff_y",
                 "pickup_tract_id", "dropoff_tract_id"});
    for (const auto& t : city.trips)
      w.write_row({format_timestamp(t.t_pickup), fmt_double(t.xp), fmt_double(t.yp), format_timestamp(t.t_dropoff),
                   fmt_double(t.xd), fmt_double(t.yd), city.tracts[t.tract_pickup].tract_id,
                   city.tracts[t.tract_dropoff].tract_id});
  }
  {
    CsvWriter w(path("census.csv"));
    std::vector<std::string> header = {"tract_id", "year"};
    for (std::size_t i = 0; i < kNumAcsVars; ++i) header.push_back("acs_" + std::to_string(i));
    for (std::size_t i = 0; i < kNumLehdVars; ++i) header.push_back("lehd_" + std::to_string(i));
    w.write_row(header);
    std::vector<std::string> f;
    for (const auto& t : city.tracts) {
      for (int year = city.config.window.start.year; year <= city.config.window.end.year; ++year) {
        f = {t.tract_id, std::to_string(year)};
        for (double v : t.census) f.push_back(fmt_double(v));
        w.write_row(f);
      }
    }
  }
  {
    std::ofstream out(path("config.json"));
    if (!out) fail(Errc::io, "cannot open config.json for writing");
    out << synth_ingest_config(city.config).dump(2) << '\n';
  }
  {
    std::ofstream out(path("truth.json"));
    if (!out) fail(Errc::io, "cannot open truth.json for writing");
    out << city.truth.dump(2) << '\n';
  }
  {
    std::ofstream out(path("synth_config.json"));
    if (!out) fail(Errc::io, "cannot open synth_config.json for writing");
    out << city.config.to_json().dump(2) << '\n';
  }
}

}  // namespace hpm
