#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "hpm/models/metrics.hpp"
#include "hpm/repeat_sales.hpp"
#include "hpm/rng.hpp"

using hpm::PairingReport;
using hpm::SalePair;
using hpm::SaleRecord;

namespace {

SaleRecord make_sale(const std::string& key, const std::string& id, int y, int m, int d, double ppu) {
  SaleRecord s;
  s.sale_id = id;
  s.property_key = key;
  s.price_per_unit = ppu;
  s.log_price = std::log(ppu);
  s.sale_date = {y, m, d};
  s.quarter = (y - 2010) * 4 + (m - 1) / 3;
  return s;
}

// Planted index with irregular shape; base quarter pinned to zero.
std::vector<double> planted_index(int num_quarters) {
  std::vector<double> idx(static_cast<std::size_t>(num_quarters));
  for (int q = 0; q < num_quarters; ++q)
    idx[static_cast<std::size_t>(q)] = 0.02 * q + 0.05 * std::sin(2.0 * 3.14159265358979 * q / 8.0);
  idx[0] = 0.0;
  return idx;
}

// Random pairs whose log_diff follows a planted index, optional noise.
// Guarantees connectivity by forcing a spine through adjacent quarters.
std::vector<SalePair> synthetic_pairs(std::size_t n, int num_quarters, const std::vector<double>& idx, double sigma,
                                      std::uint64_t seed) {
  hpm::Rng rng(seed);
  std::vector<SalePair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    SalePair p;
    p.property_key = "P" + std::to_string(i);
    int qs, qt;
    if (i < static_cast<std::size_t>(num_quarters - 1)) {
      qs = static_cast<int>(i);
      qt = qs + 1;
    } else {
      qs = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_quarters)));
      qt = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_quarters)));
      if (qs == qt) qt = (qt + 1) % num_quarters;
      if (qs > qt) std::swap(qs, qt);
    }
    p.quarter_s = qs;
    p.quarter_t = qt;
    p.dt_days = 91L * (qt - qs);
    p.log_price_s = 5.0;
    p.log_price_t = p.log_price_s + idx[static_cast<std::size_t>(qt)] - idx[static_cast<std::size_t>(qs)] +
                    (sigma > 0 ? rng.normal(0.0, sigma) : 0.0);
    p.log_diff = p.log_price_t - p.log_price_s;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = hpm::mean_of(a), mb = hpm::mean_of(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("successive sales of one property pair up in date order") {
  std::vector<SaleRecord> sales = {
      make_sale("B", "B|1|0", 2012, 5, 1, 900.0),
      make_sale("A", "A|1|1", 2013, 2, 10, 1100.0),
      make_sale("A", "A|1|0", 2010, 3, 5, 1000.0),
      make_sale("A", "A|1|2", 2015, 8, 20, 1300.0),
  };
  PairingReport rep;
  const auto pairs = hpm::pair_sales(sales, &rep);
  REQUIRE(rep.properties == 2);
  REQUIRE(rep.properties_with_pairs == 1);
  REQUIRE(rep.duplicates_dropped == 0);
  REQUIRE(rep.pairs == 2);
  REQUIRE(pairs.size() == 2);
  // Output by key then date: A's two pairs, B has none.
  REQUIRE(pairs[0].property_key == "A");
  REQUIRE(pairs[0].sale_id_s == "A|1|0");
  REQUIRE(pairs[0].sale_id_t == "A|1|1");
  REQUIRE(pairs[1].sale_id_s == "A|1|1");
  REQUIRE(pairs[1].sale_id_t == "A|1|2");
  REQUIRE(pairs[0].log_diff == Catch::Approx(std::log(1100.0) - std::log(1000.0)).margin(1e-12));
  // dt: 2010-03-05 .. 2013-02-10
  REQUIRE(pairs[0].dt_days == 1073);
  REQUIRE(pairs[0].quarter_s == 0);
  REQUIRE(pairs[0].quarter_t == 12);
}

TEST_CASE("same-date duplicates collapse to the higher price") {
  std::vector<SaleRecord> sales = {
      make_sale("A", "A|1|0", 2011, 6, 1, 500.0),
      make_sale("A", "A|1|1", 2011, 6, 1, 800.0),  // same date, higher price wins
      make_sale("A", "A|1|2", 2012, 6, 1, 900.0),
  };
  PairingReport rep;
  const auto pairs = hpm::pair_sales(sales, &rep);
  REQUIRE(rep.duplicates_dropped == 1);
  REQUIRE(pairs.size() == 1);
  REQUIRE(pairs[0].sale_id_s == "A|1|1");
  REQUIRE(pairs[0].log_price_s == Catch::Approx(std::log(800.0)).margin(1e-12));
}

TEST_CASE("pairing is invariant to input order") {
  hpm::Rng rng(9);
  std::vector<SaleRecord> sales;
  for (int k = 0; k < 40; ++k) {
    const int m = 1 + static_cast<int>(rng.uniform_int(5));
    for (int i = 0; i < m; ++i) {
      const int year = 2010 + static_cast<int>(rng.uniform_int(6));
      const int month = 1 + static_cast<int>(rng.uniform_int(12));
      const int day = 1 + static_cast<int>(rng.uniform_int(28));
      sales.push_back(make_sale("K" + std::to_string(k), "K" + std::to_string(k) + "#" + std::to_string(i), year,
                                month, day, 100.0 + rng.uniform(0.0, 1000.0)));
    }
  }
  auto shuffled = sales;
  rng.shuffle(shuffled.begin(), shuffled.end());
  const auto p1 = hpm::pair_sales(sales);
  const auto p2 = hpm::pair_sales(shuffled);
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    REQUIRE(p1[i].property_key == p2[i].property_key);
    REQUIRE(p1[i].sale_id_s == p2[i].sale_id_s);
    REQUIRE(p1[i].sale_id_t == p2[i].sale_id_t);
  }
}

TEST_CASE("noise-free pairs recover the planted index exactly") {
  const int T = 24;
  const auto idx = planted_index(T);
  const auto pairs = synthetic_pairs(500, T, idx, 0.0, 3);
  const auto est = hpm::estimate_bmn_index(pairs, T);
  REQUIRE(est.log_index.size() == static_cast<std::size_t>(T));
  REQUIRE(est.log_index[0] == 0.0);
  for (int q = 0; q < T; ++q)
    REQUIRE(std::abs(est.log_index[static_cast<std::size_t>(q)] - idx[static_cast<std::size_t>(q)]) < 1e-10);
  REQUIRE(est.residual_variance < 1e-18);
  REQUIRE(est.n_pairs == 500);
}

TEST_CASE("noisy pairs track the planted index closely") {
  const int T = 24;
  const auto idx = planted_index(T);
  const auto pairs = synthetic_pairs(2000, T, idx, 0.05, 4);
  const auto est = hpm::estimate_bmn_index(pairs, T);
  REQUIRE(pearson(est.log_index, idx) > 0.99);
  // Residual variance estimates sigma^2.
  REQUIRE(est.residual_variance > 0.5 * 0.05 * 0.05);
  REQUIRE(est.residual_variance < 2.0 * 0.05 * 0.05);
}

TEST_CASE("estimate is invariant to pair order") {
  const int T = 12;
  const auto idx = planted_index(T);
  auto pairs = synthetic_pairs(300, T, idx, 0.1, 5);
  const auto est1 = hpm::estimate_bmn_index(pairs, T);
  std::reverse(pairs.begin(), pairs.end());
  const auto est2 = hpm::estimate_bmn_index(pairs, T);
  for (int q = 0; q < T; ++q)
    REQUIRE(est1.log_index[static_cast<std::size_t>(q)] ==
            Catch::Approx(est2.log_index[static_cast<std::size_t>(q)]).margin(1e-12));
}

TEST_CASE("disconnected quarters are reported, not silently extrapolated") {
  // Pairs cover quarters 0-3 and 6-8 but nothing bridges the two islands.
  std::vector<SalePair> pairs;
  auto add = [&pairs](int qs, int qt) {
    SalePair p;
    p.property_key = "P" + std::to_string(pairs.size());
    p.quarter_s = qs;
    p.quarter_t = qt;
    p.log_diff = 0.01 * (qt - qs);
    pairs.push_back(p);
  };
  add(0, 1);
  add(1, 3);
  add(2, 3);
  add(6, 7);
  add(7, 8);
  try {
    hpm::estimate_bmn_index(pairs, 9);
    FAIL("expected an identification error");
  } catch (const hpm::Error& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("not linked") != std::string::npos);
    REQUIRE(msg.find("{4, 5, 6, 7, 8}") != std::string::npos);
  }
}

TEST_CASE("estimator input validation") {
  std::vector<SalePair> pairs;
  REQUIRE_THROWS_AS(hpm::estimate_bmn_index(pairs, 0), hpm::Error);
  REQUIRE_THROWS_AS(hpm::estimate_bmn_index(pairs, 8), hpm::Error);
  SalePair p;
  p.quarter_s = 0;
  p.quarter_t = 9;
  pairs.push_back(p);
  REQUIRE_THROWS_AS(hpm::estimate_bmn_index(pairs, 8), hpm::Error);
}

TEST_CASE("single-quarter index is identically zero") {
  SalePair p;
  p.quarter_s = 0;
  p.quarter_t = 0;
  p.log_diff = 0.3;
  const auto est = hpm::estimate_bmn_index({p}, 1);
  REQUIRE(est.log_index == std::vector<double>{0.0});
}

TEST_CASE("change dataset carries holding period, index delta, and both sides' features") {
  const int T = 8;
  const auto idx = planted_index(T);
  auto pairs = synthetic_pairs(20, T, idx, 0.0, 6);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].sale_id_s = "s" + std::to_string(i);
    pairs[i].sale_id_t = "t" + std::to_string(i);
  }

  hpm::FeatureMatrix fm;
  fm.schema.columns = {"f0", "f1", "f2"};
  fm.schema.blocks.push_back({"hc", 0, 3});
  fm.n = 2 * pairs.size();
  fm.x.resize(fm.n * 3);
  hpm::Rng rng(7);
  for (auto& v : fm.x) v = rng.uniform(0.0, 1.0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    fm.sale_id.push_back("s" + std::to_string(i));
    fm.sale_id.push_back("t" + std::to_string(i));
  }
  fm.y.assign(fm.n, 0.0);

  hpm::PriceIndex pindex;
  pindex.log_index = idx;
  const auto ds = hpm::build_change_dataset(pairs, pindex, &fm);
  REQUIRE(ds.columns.size() == 2 + 2 * 3);
  REQUIRE(ds.columns[0] == "dt_days");
  REQUIRE(ds.columns[1] == "d_index");
  REQUIRE(ds.columns[2] == "s_f0");
  REQUIRE(ds.columns[5] == "t_f0");
  REQUIRE(ds.n == pairs.size());
  REQUIRE(ds.skipped_pairs == 0);
  for (std::size_t i = 0; i < ds.n; ++i) {
    REQUIRE(ds.at(i, 0) == static_cast<double>(pairs[i].dt_days));
    REQUIRE(ds.at(i, 1) ==
            idx[static_cast<std::size_t>(pairs[i].quarter_t)] - idx[static_cast<std::size_t>(pairs[i].quarter_s)]);
    for (std::size_t j = 0; j < 3; ++j) {
      REQUIRE(ds.at(i, 2 + j) == fm.at(2 * i, j));
      REQUIRE(ds.at(i, 5 + j) == fm.at(2 * i + 1, j));
    }
    REQUIRE(ds.y[i] == pairs[i].log_diff);
  }

  // A pair with an unmatched sale id is skipped and counted.
  auto broken = pairs;
  broken[3].sale_id_s = "missing";
  const auto ds2 = hpm::build_change_dataset(broken, pindex, &fm);
  REQUIRE(ds2.n == pairs.size() - 1);
  REQUIRE(ds2.skipped_pairs == 1);

  // Without a feature matrix only the two base columns appear.
  const auto ds3 = hpm::build_change_dataset(pairs, pindex, nullptr);
  REQUIRE(ds3.columns == std::vector<std::string>{"dt_days", "d_index"});
  REQUIRE(ds3.n == pairs.size());

  // Shifting every index level by a constant leaves d_index unchanged.
  auto shifted = pindex;
  for (auto& v : shifted.log_index) v += 1.7;
  const auto ds4 = hpm::build_change_dataset(pairs, shifted, nullptr);
  for (std::size_t i = 0; i < ds4.n; ++i) REQUIRE(ds4.at(i, 1) == Catch::Approx(ds.at(i, 1)).margin(1e-12));
}

TEST_CASE("pairs survive a csv round trip") {
  std::vector<SaleRecord> sales = {
      make_sale("A", "A|1|0", 2010, 3, 5, 1000.0),
      make_sale("A", "A|1|1", 2013, 2, 10, 1100.0),
      make_sale("B", "B|2|0", 2011, 7, 7, 250.5),
      make_sale("B", "B|2|1", 2014, 11, 30, 325.25),
  };
  const auto pairs = hpm::pair_sales(sales);
  const std::string path = "/tmp/hpm_pairs_test.csv";
  hpm::write_pairs_csv(path, pairs);
  const auto back = hpm::read_pairs_csv(path);
  REQUIRE(back.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    REQUIRE(back[i].property_key == pairs[i].property_key);
    REQUIRE(back[i].sale_id_s == pairs[i].sale_id_s);
    REQUIRE(back[i].sale_id_t == pairs[i].sale_id_t);
    REQUIRE(back[i].date_s == pairs[i].date_s);
    REQUIRE(back[i].date_t == pairs[i].date_t);
    REQUIRE(back[i].quarter_s == pairs[i].quarter_s);
    REQUIRE(back[i].quarter_t == pairs[i].quarter_t);
    REQUIRE(back[i].dt_days == pairs[i].dt_days);
    REQUIRE(back[i].log_price_s == pairs[i].log_price_s);
    REQUIRE(back[i].log_diff == pairs[i].log_diff);
  }
  std::remove(path.c_str());

  const std::string ipath = "/tmp/hpm_index_test.csv";
  hpm::PriceIndex pi;
  pi.log_index = planted_index(6);
  hpm::write_index_csv(ipath, pi);
  hpm::CsvReader r(ipath);
  REQUIRE(r.header() == std::vector<std::string>{"quarter", "log_index"});
  std::vector<std::string> f;
  std::size_t rows = 0;
  while (r.next(f)) {
    REQUIRE(hpm::require_int(f[0], "quarter") == static_cast<long long>(rows));
    REQUIRE(hpm::require_double(f[1], "log_index") == pi.log_index[rows]);
    ++rows;
  }
  REQUIRE(rows == 6);
  std::remove(ipath.c_str());
}
