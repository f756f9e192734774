#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hpm/binio.hpp"
#include "hpm/error.hpp"
#include "hpm/types.hpp"

namespace hpm {

// Disc + half-open time window: distance <= radius (inclusive),
// timestamp in [window_end - window_length, window_end).
struct QueryScope {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 1000.0;
  std::int64_t window_end = 0;
  std::int64_t window_length = 365 * kSecondsPerDay;

  bool valid() const { return radius > 0.0 && window_length > 0; }
};

// Immutable uniform-grid index over point events. Cell size defaults to the
// query radius, so any query disc overlaps at most 9 cells. Within a cell,
// events are held sorted by timestamp; results are exact (the grid only
// prunes candidates, the final filter compares true distances and times).
class SpatioTemporalIndex {
 public:
  SpatioTemporalIndex() = default;

  static SpatioTemporalIndex build(std::vector<EventRecord> events, double cell_size = 1000.0) {
    if (cell_size <= 0.0) fail(Errc::data, "cell_size must be positive");
    SpatioTemporalIndex idx;
    idx.cell_ = cell_size;
    if (events.empty()) return idx;

    for (std::size_t i = 0; i < events.size(); ++i) {
      if (!std::isfinite(events[i].x) || !std::isfinite(events[i].y))
        fail(Errc::data, "non-finite coordinate in event " + std::to_string(i));
    }

    double minx = events[0].x, maxx = events[0].x, miny = events[0].y, maxy = events[0].y;
    for (const auto& e : events) {
      minx = std::min(minx, e.x);
      maxx = std::max(maxx, e.x);
      miny = std::min(miny, e.y);
      maxy = std::max(maxy, e.y);
    }
    idx.minx_ = minx;
    idx.miny_ = miny;
    idx.ncols_ = 1 + static_cast<int>(std::floor((maxx - minx) / cell_size));
    idx.nrows_ = 1 + static_cast<int>(std::floor((maxy - miny) / cell_size));

    const std::size_t ncells = static_cast<std::size_t>(idx.ncols_) * static_cast<std::size_t>(idx.nrows_);
    std::vector<std::uint32_t> counts(ncells, 0);
    std::vector<std::uint32_t> cell_of(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      cell_of[i] = idx.cell_id(events[i].x, events[i].y);
      ++counts[cell_of[i]];
    }
    idx.cell_start_.assign(ncells + 1, 0);
    for (std::size_t c = 0; c < ncells; ++c) idx.cell_start_[c + 1] = idx.cell_start_[c] + counts[c];

    // stable counting sort by cell, then stable time sort within each cell
    idx.events_.resize(events.size());
    std::vector<std::uint32_t> cursor(idx.cell_start_.begin(), idx.cell_start_.end() - 1);
    for (std::size_t i = 0; i < events.size(); ++i) idx.events_[cursor[cell_of[i]]++] = events[i];
    for (std::size_t c = 0; c < ncells; ++c) {
      auto b = idx.events_.begin() + idx.cell_start_[c];
      auto e = idx.events_.begin() + idx.cell_start_[c + 1];
      std::stable_sort(b, e, [](const EventRecord& a, const EventRecord& b2) { return a.timestamp < b2.timestamp; });
    }
    return idx;
  }

  std::size_t event_count() const { return events_.size(); }
  double cell_size() const { return cell_; }
  int ncols() const { return ncols_; }
  int nrows() const { return nrows_; }
  const std::vector<EventRecord>& events() const { return events_; }

  std::size_t cell_population(int row, int col) const {
    std::size_t c = static_cast<std::size_t>(row) * ncols_ + col;
    return cell_start_[c + 1] - cell_start_[c];
  }

  // Appends indices (into events()) of all matches.
  void query(const QueryScope& q, std::vector<std::uint32_t>& out) const {
    if (!q.valid()) fail(Errc::data, "invalid query scope");
    if (events_.empty()) return;
    const std::int64_t t0 = q.window_end - q.window_length;
    const std::int64_t t1 = q.window_end;
    const double r2 = q.radius * q.radius;

    const int c0 = clamp_col(col_of(q.cx - q.radius));
    const int c1 = clamp_col(col_of(q.cx + q.radius));
    const int r0 = clamp_row(row_of(q.cy - q.radius));
    const int r1 = clamp_row(row_of(q.cy + q.radius));
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const std::size_t c = static_cast<std::size_t>(row) * ncols_ + col;
        const std::uint32_t b = cell_start_[c];
        const std::uint32_t e = cell_start_[c + 1];
        // events are time-sorted within the cell
        const EventRecord* base = events_.data();
        auto lo = std::lower_bound(base + b, base + e, t0,
                                   [](const EventRecord& ev, std::int64_t t) { return ev.timestamp < t; });
        for (const EventRecord* p = lo; p != base + e && p->timestamp < t1; ++p) {
          const double dx = p->x - q.cx;
          const double dy = p->y - q.cy;
          if (dx * dx + dy * dy <= r2) out.push_back(static_cast<std::uint32_t>(p - base));
        }
      }
    }
  }

  std::vector<std::uint32_t> query(const QueryScope& q) const {
    std::vector<std::uint32_t> out;
    query(q, out);
    return out;
  }

  // --- binary snapshot (versioned, little-endian) ---
  // layout: magic "HPMSTIDX", u32 version, f64 cell, f64 minx, f64 miny,
  // i32 ncols, i32 nrows, u64 nevents, u64 cell_start[ncells+1], then per
  // event: i64 timestamp, f64 x, f64 y, u16 category, u8 kind.
  static constexpr char kMagic[9] = "HPMSTIDX";
  static constexpr std::uint32_t kVersion = 1;

  void save(const std::string& path) const {
    using namespace binio;
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "cannot open snapshot for writing: " + path);
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    put_f64(out, cell_);
    put_f64(out, minx_);
    put_f64(out, miny_);
    put_u32(out, static_cast<std::uint32_t>(ncols_));
    put_u32(out, static_cast<std::uint32_t>(nrows_));
    put_u64(out, events_.size());
    for (std::uint64_t v : cell_start_) put_u64(out, v);
    for (const auto& e : events_) {
      put_u64(out, static_cast<std::uint64_t>(e.timestamp));
      put_f64(out, e.x);
      put_f64(out, e.y);
      put_u16(out, e.category);
      out.put(static_cast<char>(e.kind));
    }
    if (!out) fail(Errc::io, "short write to snapshot: " + path);
  }

  static SpatioTemporalIndex load(const std::string& path) {
    using namespace binio;
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "missing index snapshot: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) fail(Errc::schema, "bad index snapshot magic: " + path);
    if (get_u32(in) != kVersion) fail(Errc::schema, "unsupported index snapshot version: " + path);
    SpatioTemporalIndex idx;
    idx.cell_ = get_f64(in);
    idx.minx_ = get_f64(in);
    idx.miny_ = get_f64(in);
    idx.ncols_ = static_cast<int>(get_u32(in));
    idx.nrows_ = static_cast<int>(get_u32(in));
    const std::uint64_t n = get_u64(in);
    const std::size_t ncells = static_cast<std::size_t>(idx.ncols_) * static_cast<std::size_t>(idx.nrows_);
    idx.cell_start_.resize(ncells + 1);
    for (auto& v : idx.cell_start_) v = static_cast<std::uint32_t>(get_u64(in));
    idx.events_.resize(n);
    for (auto& e : idx.events_) {
      e.timestamp = static_cast<std::int64_t>(get_u64(in));
      e.x = get_f64(in);
      e.y = get_f64(in);
      e.category = get_u16(in);
      e.kind = static_cast<DatasetKind>(in.get());
    }
    if (!in) fail(Errc::schema, "truncated index snapshot: " + path);
    return idx;
  }

 private:
  int col_of(double x) const { return static_cast<int>(std::floor((x - minx_) / cell_)); }
  int row_of(double y) const { return static_cast<int>(std::floor((y - miny_) / cell_)); }
  int clamp_col(int c) const { return std::max(0, std::min(ncols_ - 1, c)); }
  int clamp_row(int r) const { return std::max(0, std::min(nrows_ - 1, r)); }

  std::uint32_t cell_id(double x, double y) const {
    return static_cast<std::uint32_t>(clamp_row(row_of(y))) * ncols_ + clamp_col(col_of(x));
  }

  double minx_ = 0.0, miny_ = 0.0;
  double cell_ = 1000.0;
  int ncols_ = 0, nrows_ = 0;
  std::vector<std::uint32_t> cell_start_{0};
  std::vector<EventRecord> events_;
};

}  // namespace hpm
