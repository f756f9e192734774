#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace hpm {

enum class R2Baseline { test_mean, train_mean };

// 1 - SSres/SStot. SStot is taken about the held-out mean by default; the
// train-mean variant is a config switch. Zero total variance (or fewer than
// two points) leaves R^2 undefined.
inline std::optional<double> r_squared(const std::vector<double>& y_true, const std::vector<double>& y_pred,
                                       R2Baseline baseline = R2Baseline::test_mean, double train_mean = 0.0) {
  const std::size_t n = y_true.size();
  if (n != y_pred.size() || n < 2) return std::nullopt;
  double center = train_mean;
  if (baseline == R2Baseline::test_mean) {
    double s = 0.0;
    for (double v : y_true) s += v;
    center = s / static_cast<double>(n);
  }
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y_true[i] - y_pred[i];
    const double t = y_true[i] - center;
    ss_res += r * r;
    ss_tot += t * t;
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation (n-1); zero for fewer than two values.
inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace hpm
