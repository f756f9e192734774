#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "hpm/error.hpp"

namespace hpm {

constexpr std::int64_t kSecondsPerDay = 86400;

struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  friend constexpr auto operator<=>(const CivilDate&, const CivilDate&) = default;
};

// Days since 1970-01-01 (proleptic Gregorian).
constexpr std::int64_t days_from_civil(int y, int m, int d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr std::int64_t days_from_civil(const CivilDate& c) noexcept {
  return days_from_civil(c.year, c.month, c.day);
}

constexpr CivilDate civil_from_days(std::int64_t z) noexcept {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
  std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

// Monday = 0 .. Sunday = 6.
constexpr int weekday_from_days(std::int64_t days) noexcept {
  return static_cast<int>(((days % 7) + 10) % 7);
}

constexpr int weekday_of(std::int64_t t_seconds) noexcept {
  return weekday_from_days(floor_div(t_seconds, kSecondsPerDay));
}

constexpr int second_of_day(std::int64_t t_seconds) noexcept {
  return static_cast<int>(t_seconds - floor_div(t_seconds, kSecondsPerDay) * kSecondsPerDay);
}

constexpr std::int64_t seconds_from_civil(const CivilDate& c) noexcept {
  return days_from_civil(c) * kSecondsPerDay;
}

// Absolute quarter number (year*4 + quarter-of-year).
constexpr int absolute_quarter(const CivilDate& c) noexcept {
  return c.year * 4 + (c.month - 1) / 3;
}

inline std::optional<CivilDate> parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  char sep1 = 0, sep2 = 0;
  if (std::sscanf(std::string(s).c_str(), "%d%c%d%c%d", &y, &sep1, &m, &sep2, &d) != 5) return std::nullopt;
  if (sep1 != '-' || sep2 != '-') return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  CivilDate c{y, m, d};
  if (civil_from_days(days_from_civil(c)) != c) return std::nullopt;  // rejects e.g. Feb 30
  return c;
}

// "YYYY-MM-DD HH:MM:SS" or "YYYY-MM-DDTHH:MM:SS"; seconds optional.
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  std::string buf(s);
  for (auto& ch : buf)
    if (ch == 'T') ch = ' ';
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int n = std::sscanf(buf.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &sec);
  if (n < 5) {
    auto date = parse_date(s);
    if (!date) return std::nullopt;
    return seconds_from_civil(*date);
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60)
    return std::nullopt;
  CivilDate c{y, mo, d};
  if (civil_from_days(days_from_civil(c)) != c) return std::nullopt;
  return seconds_from_civil(c) + h * 3600 + mi * 60 + sec;
}

inline std::string format_date(const CivilDate& c) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", c.year, c.month, c.day);
  return buf;
}

inline std::string format_timestamp(std::int64_t t) {
  CivilDate c = civil_from_days(floor_div(t, kSecondsPerDay));
  int s = second_of_day(t);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", c.year, c.month, c.day, s / 3600, (s / 60) % 60,
                s % 60);
  return buf;
}

// Calendar study window, inclusive on both ends. Quarter indexes are
// calendar-quarter offsets from the window start.
struct StudyWindow {
  CivilDate start{2010, 1, 1};
  CivilDate end{2015, 12, 31};

  bool contains(const CivilDate& d) const { return start <= d && d <= end; }
  int quarter_index(const CivilDate& d) const { return absolute_quarter(d) - absolute_quarter(start); }
  int num_quarters() const { return absolute_quarter(end) - absolute_quarter(start) + 1; }
};

}  // namespace hpm
