#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <vector>

#include "hpm/geoindex.hpp"
#include "hpm/rng.hpp"
#include "hpm/time.hpp"

using hpm::EventRecord;
using hpm::QueryScope;
using hpm::SpatioTemporalIndex;

namespace {

std::vector<EventRecord> random_events(std::size_t n, std::uint64_t seed, double extent = 20000.0,
                                       std::int64_t tspan = 400 * hpm::kSecondsPerDay) {
  hpm::Rng rng(seed);
  std::vector<EventRecord> events(n);
  for (auto& e : events) {
    e.x = rng.uniform(-extent, extent);
    e.y = rng.uniform(-extent, extent);
    e.timestamp = static_cast<std::int64_t>(rng.uniform(0.0, static_cast<double>(tspan)));
    e.category = static_cast<std::uint16_t>(rng.uniform_int(8));
    e.kind = static_cast<hpm::DatasetKind>(rng.uniform_int(4));
  }
  return events;
}

// Reference implementation: linear scan with the exact same predicate.
std::set<std::uint32_t> brute_force(const std::vector<EventRecord>& events, const QueryScope& q) {
  std::set<std::uint32_t> out;
  const std::int64_t t0 = q.window_end - q.window_length;
  for (std::uint32_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const double dx = e.x - q.cx, dy = e.y - q.cy;
    if (dx * dx + dy * dy <= q.radius * q.radius && e.timestamp >= t0 && e.timestamp < q.window_end) out.insert(i);
  }
  return out;
}

std::set<std::uint32_t> as_set(std::vector<std::uint32_t> v) { return {v.begin(), v.end()}; }

// Index order may differ from input order; compare matched records as
// multisets of values.
std::multiset<std::tuple<std::int64_t, double, double>> matched_values(const SpatioTemporalIndex& idx,
                                                                       const std::vector<std::uint32_t>& hits) {
  std::multiset<std::tuple<std::int64_t, double, double>> out;
  for (auto i : hits) {
    const auto& e = idx.events()[i];
    out.insert({e.timestamp, e.x, e.y});
  }
  return out;
}

std::multiset<std::tuple<std::int64_t, double, double>> matched_values(const std::vector<EventRecord>& events,
                                                                       const std::set<std::uint32_t>& hits) {
  std::multiset<std::tuple<std::int64_t, double, double>> out;
  for (auto i : hits) out.insert({events[i].timestamp, events[i].x, events[i].y});
  return out;
}

}  // namespace

TEST_CASE("query matches a brute-force scan on random scopes") {
  const auto events = random_events(5000, 1);
  const auto idx = SpatioTemporalIndex::build(events, 1000.0);
  hpm::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    QueryScope q;
    q.cx = rng.uniform(-22000.0, 22000.0);
    q.cy = rng.uniform(-22000.0, 22000.0);
    q.radius = rng.uniform(100.0, 3000.0);
    q.window_end = static_cast<std::int64_t>(rng.uniform(0.0, 400.0 * hpm::kSecondsPerDay));
    q.window_length = static_cast<std::int64_t>(rng.uniform(1.0, 200.0) * hpm::kSecondsPerDay);
    REQUIRE(matched_values(idx, idx.query(q)) == matched_values(events, brute_force(events, q)));
  }
}

TEST_CASE("radius boundary is inclusive, window end is exclusive") {
  std::vector<EventRecord> events;
  const std::int64_t end = 1000 * hpm::kSecondsPerDay;
  const std::int64_t len = 10 * hpm::kSecondsPerDay;
  // exactly on the circle
  events.push_back({end - 1, 1000.0, 0.0, 0, hpm::DatasetKind::complaint311});
  // just outside
  events.push_back({end - 1, 1000.0000001, 0.0, 0, hpm::DatasetKind::complaint311});
  // at window start (included), at window end (excluded), just before start
  events.push_back({end - len, 0.0, 0.0, 0, hpm::DatasetKind::complaint311});
  events.push_back({end, 0.0, 0.0, 0, hpm::DatasetKind::complaint311});
  events.push_back({end - len - 1, 0.0, 0.0, 0, hpm::DatasetKind::complaint311});

  const auto idx = SpatioTemporalIndex::build(events, 1000.0);
  QueryScope q;
  q.cx = 0.0;
  q.cy = 0.0;
  q.radius = 1000.0;
  q.window_end = end;
  q.window_length = len;
  const auto hits = matched_values(idx, idx.query(q));
  REQUIRE(hits.size() == 2);
  REQUIRE(hits.count({end - 1, 1000.0, 0.0}) == 1);
  REQUIRE(hits.count({end - len, 0.0, 0.0}) == 1);
}

TEST_CASE("result sets are invariant to input order") {
  auto events = random_events(2000, 3);
  const auto idx1 = SpatioTemporalIndex::build(events, 500.0);
  std::reverse(events.begin(), events.end());
  const auto idx2 = SpatioTemporalIndex::build(events, 500.0);
  hpm::Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    QueryScope q;
    q.cx = rng.uniform(-20000.0, 20000.0);
    q.cy = rng.uniform(-20000.0, 20000.0);
    q.radius = rng.uniform(200.0, 2500.0);
    q.window_end = static_cast<std::int64_t>(rng.uniform(0.0, 400.0 * hpm::kSecondsPerDay));
    q.window_length = 50 * hpm::kSecondsPerDay;
    REQUIRE(matched_values(idx1, idx1.query(q)) == matched_values(idx2, idx2.query(q)));
  }
}

TEST_CASE("cell size does not change results") {
  const auto events = random_events(2000, 5);
  const auto idx1 = SpatioTemporalIndex::build(events, 1000.0);
  const auto idx2 = SpatioTemporalIndex::build(events, 333.0);
  const auto idx3 = SpatioTemporalIndex::build(events, 5000.0);
  hpm::Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    QueryScope q;
    q.cx = rng.uniform(-20000.0, 20000.0);
    q.cy = rng.uniform(-20000.0, 20000.0);
    q.radius = 1000.0;
    q.window_end = static_cast<std::int64_t>(rng.uniform(0.0, 400.0 * hpm::kSecondsPerDay));
    q.window_length = 100 * hpm::kSecondsPerDay;
    const auto a = matched_values(idx1, idx1.query(q));
    REQUIRE(a == matched_values(idx2, idx2.query(q)));
    REQUIRE(a == matched_values(idx3, idx3.query(q)));
  }
}

TEST_CASE("queries far outside the grid return nothing") {
  const auto events = random_events(500, 7, 1000.0);
  const auto idx = SpatioTemporalIndex::build(events, 1000.0);
  QueryScope q;
  q.cx = 1e7;
  q.cy = -1e7;
  q.radius = 500.0;
  q.window_end = 400 * hpm::kSecondsPerDay;
  q.window_length = 400 * hpm::kSecondsPerDay;
  REQUIRE(idx.query(q).empty());
}

TEST_CASE("empty index returns nothing") {
  const auto idx = SpatioTemporalIndex::build({}, 1000.0);
  QueryScope q;
  q.window_end = 100;
  q.window_length = 100;
  REQUIRE(idx.query(q).empty());
}

TEST_CASE("degenerate scopes are rejected") {
  const auto idx = SpatioTemporalIndex::build(random_events(10, 8), 1000.0);
  QueryScope q;
  q.radius = 0.0;
  q.window_end = 100;
  q.window_length = 100;
  REQUIRE_THROWS_AS(idx.query(q), hpm::Error);
  q.radius = 100.0;
  q.window_length = 0;
  REQUIRE_THROWS_AS(idx.query(q), hpm::Error);
}

TEST_CASE("non-positive cell size is rejected") {
  REQUIRE_THROWS_AS(SpatioTemporalIndex::build({}, 0.0), hpm::Error);
  REQUIRE_THROWS_AS(SpatioTemporalIndex::build({}, -5.0), hpm::Error);
}

TEST_CASE("snapshot round-trip preserves events and query results") {
  const auto events = random_events(1500, 9);
  const auto idx = SpatioTemporalIndex::build(events, 800.0);
  const std::string path = "/tmp/hpm_test_snapshot.idx";
  idx.save(path);
  const auto idx2 = SpatioTemporalIndex::load(path);
  std::remove(path.c_str());

  REQUIRE(idx2.event_count() == idx.event_count());
  REQUIRE(idx2.events() == idx.events());
  hpm::Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    QueryScope q;
    q.cx = rng.uniform(-20000.0, 20000.0);
    q.cy = rng.uniform(-20000.0, 20000.0);
    q.radius = rng.uniform(200.0, 2500.0);
    q.window_end = static_cast<std::int64_t>(rng.uniform(0.0, 400.0 * hpm::kSecondsPerDay));
    q.window_length = 80 * hpm::kSecondsPerDay;
    REQUIRE(as_set(idx.query(q)) == as_set(idx2.query(q)));
  }
}

TEST_CASE("corrupt snapshots are schema errors") {
  const std::string path = "/tmp/hpm_test_bad_snapshot.idx";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTMAGIC garbage";
  }
  REQUIRE_THROWS_AS(SpatioTemporalIndex::load(path), hpm::Error);
  try {
    SpatioTemporalIndex::load(path);
  } catch (const hpm::Error& e) {
    REQUIRE(e.code() == hpm::Errc::schema);
  }
  std::remove(path.c_str());
  REQUIRE_THROWS_AS(SpatioTemporalIndex::load("/tmp/hpm_missing_snapshot.idx"), hpm::Error);
}
