#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hpm/error.hpp"
#include "hpm/time.hpp"

namespace hpm {

enum class DatasetKind : std::uint8_t {
  complaint311 = 0,
  crime = 1,
  taxi_pickup = 2,
  taxi_dropoff = 3,
};

constexpr std::size_t kNumDatasetKinds = 4;
constexpr int kNumCharacteristics = 30;
constexpr std::size_t kNumAcsVars = 9;
constexpr std::size_t kNumLehdVars = 2;
constexpr std::size_t kTimelineBins = 56;  // 7 days x 8 three-hour bins
constexpr std::uint16_t kTaxiCategory = 0;

inline std::string_view to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::complaint311: return "311";
    case DatasetKind::crime: return "crime";
    case DatasetKind::taxi_pickup: return "taxi_pickup";
    case DatasetKind::taxi_dropoff: return "taxi_dropoff";
  }
  return "?";
}

inline DatasetKind parse_dataset_kind(std::string_view s) {
  if (s == "311") return DatasetKind::complaint311;
  if (s == "crime") return DatasetKind::crime;
  if (s == "taxi_pickup") return DatasetKind::taxi_pickup;
  if (s == "taxi_dropoff") return DatasetKind::taxi_dropoff;
  fail(Errc::schema, "unknown dataset kind: " + std::string(s));
}

// One timestamped, geolocated point event. Coordinates are planar meters.
struct EventRecord {
  std::int64_t timestamp = 0;  // seconds, local civil time as recorded
  double x = 0.0;
  double y = 0.0;
  std::uint16_t category = 0;
  DatasetKind kind = DatasetKind::complaint311;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

// Per-dataset category vocabulary; events outside it are dropped and counted.
struct CategoryTable {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint16_t> index;

  static CategoryTable from_names(std::vector<std::string> ns) {
    CategoryTable t;
    t.names = std::move(ns);
    for (std::size_t i = 0; i < t.names.size(); ++i) t.index[t.names[i]] = static_cast<std::uint16_t>(i);
    return t;
  }

  static CategoryTable taxi() { return from_names({"trip"}); }

  std::size_t size() const { return names.size(); }
};

struct RawSaleRecord {
  std::string bbl;
  double sale_price = 0.0;
  CivilDate sale_date;
  int unit_count = 1;
  bool residential = true;
};

// One cleaned residential transaction. The sale_id encodes the property key
// as "<bbl>|<unit_count>|<seq>" so repeat-sale pairing can recover identity
// from the cleaned file alone.
struct SaleRecord {
  std::string sale_id;
  std::string property_key;  // bbl|unit_count (or bbl in bbl-only mode)
  double price_per_unit = 0.0;
  double log_price = 0.0;
  CivilDate sale_date;
  int quarter = 0;  // 0-based calendar-quarter offset from study start
  double x = 0.0;
  double y = 0.0;
  std::string tract_id;
  std::string zipcode_id;
  std::string district_id;
  std::vector<double> characteristics;  // length kNumCharacteristics
};

struct TractCensus {
  std::string tract_id;
  int year = 0;
  std::array<double, kNumAcsVars> acs{};
  std::array<double, kNumLehdVars> lehd{};
};

struct CleaningReport {
  std::size_t input_count = 0;
  std::size_t nonresidential_removed = 0;
  std::size_t zero_price_removed = 0;
  std::size_t unmatched_bbl_removed = 0;
  std::size_t tail_trimmed = 0;
  std::size_t output_count = 0;

  bool reconciles() const {
    return input_count ==
           output_count + nonresidential_removed + zero_price_removed + unmatched_bbl_removed + tail_trimmed;
  }
};

struct RowError {
  std::size_t row = 0;  // 0-based data-row index
  std::string message;
};

}  // namespace hpm
