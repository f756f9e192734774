#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "hpm/error.hpp"
#include "hpm/features.hpp"

namespace hpm {

// One-hot encoding of a categorical factor with the first (sorted) level as
// the omitted baseline. Levels come from training rows only; a row with an
// unseen level cannot be encoded and is flagged unpredictable upstream.
struct DummyEncoder {
  std::string factor;
  std::vector<std::string> levels;  // sorted; levels[0] is the baseline
  std::unordered_map<std::string, std::size_t> level_index;

  static DummyEncoder fit(const std::string& factor, const std::vector<std::string>& values,
                          const std::vector<std::size_t>& rows) {
    DummyEncoder e;
    e.factor = factor;
    std::set<std::string> uniq;
    for (std::size_t r : rows) uniq.insert(values[r]);
    e.levels.assign(uniq.begin(), uniq.end());
    for (std::size_t i = 0; i < e.levels.size(); ++i) e.level_index.emplace(e.levels[i], i);
    return e;
  }

  std::size_t width() const { return levels.empty() ? 0 : levels.size() - 1; }

  // Writes width() values; false when the level was not seen at fit time.
  bool encode(const std::string& value, double* out) const {
    std::fill(out, out + width(), 0.0);
    auto it = level_index.find(value);
    if (it == level_index.end()) return false;
    if (it->second > 0) out[it->second - 1] = 1.0;
    return true;
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 1; i < levels.size(); ++i) names.push_back(factor + "=" + levels[i]);
    return names;
  }
};

inline const std::vector<std::string> kKnownFactors = {"tract", "zipcode", "district", "quarter", "tract_x_quarter"};

inline void validate_factors(const std::vector<std::string>& factors) {
  for (const auto& f : factors)
    if (std::find(kKnownFactors.begin(), kKnownFactors.end(), f) == kKnownFactors.end())
      fail(Errc::usage, "unknown dummy factor '" + f + "'");
  const bool tract = std::count(factors.begin(), factors.end(), "tract") > 0;
  const bool cross = std::count(factors.begin(), factors.end(), "tract_x_quarter") > 0;
  // tract dummies are linear combinations of tract*quarter dummies
  if (tract && cross) fail(Errc::usage, "factors tract and tract_x_quarter are collinear by construction");
  for (const auto& f : kKnownFactors)
    if (std::count(factors.begin(), factors.end(), f) > 1) fail(Errc::usage, "duplicate factor '" + f + "'");
}

// Factor value of one matrix row, as a string level.
inline std::string factor_value(const FeatureMatrix& fm, const std::string& factor, std::size_t row) {
  if (factor == "tract") return fm.tract_id[row];
  if (factor == "zipcode") return fm.zipcode_id[row];
  if (factor == "district") return fm.district_id[row];
  if (factor == "quarter") return std::to_string(fm.quarter[row]);
  if (factor == "tract_x_quarter") return fm.tract_id[row] + "@" + std::to_string(fm.quarter[row]);
  fail(Errc::usage, "unknown dummy factor '" + factor + "'");
}

}  // namespace hpm
