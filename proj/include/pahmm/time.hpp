#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pahmm {

// Calendar arithmetic at minute resolution on a local clock. No timezone
// handling: the hour written in the timestamp is the hour used everywhere.

// Days since 1970-01-01 for a proleptic Gregorian civil date.
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

// Parses "YYYY-MM-DDTHH:MM[:SS]" (space accepted instead of 'T', trailing 'Z'
// ignored) into minutes since the epoch. Seconds, when present, are dropped.
inline bool parse_timestamp(std::string_view s, std::int64_t& epoch_min) {
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() < 16) return false;
  auto digits = [&](std::size_t pos, std::size_t n, int& out) {
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (i >= s.size() || s[i] < '0' || s[i] > '9') return false;
      v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
  };
  int y, mo, d, h, mi;
  if (!digits(0, 4, y) || s[4] != '-' || !digits(5, 2, mo) || s[7] != '-' ||
      !digits(8, 2, d))
    return false;
  if (s[10] != 'T' && s[10] != ' ') return false;
  if (!digits(11, 2, h) || s[13] != ':' || !digits(14, 2, mi)) return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59) return false;
  epoch_min = days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
  return true;
}

inline std::int64_t parse_timestamp_or_throw(std::string_view s) {
  std::int64_t v;
  if (!parse_timestamp(s, v))
    throw std::invalid_argument("bad timestamp: " + std::string(s));
  return v;
}

inline std::string format_timestamp(std::int64_t epoch_min) {
  std::int64_t day = epoch_min >= 0 ? epoch_min / 1440 : (epoch_min - 1439) / 1440;
  const int mod = static_cast<int>(epoch_min - day * 1440);
  int y, m, d;
  civil_from_days(day, y, m, d);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:00", y, m, d,
                mod / 60, mod % 60);
  return buf;
}

inline int hour_of_minute(std::int64_t epoch_min) {
  std::int64_t mod = epoch_min % 1440;
  if (mod < 0) mod += 1440;
  return static_cast<int>(mod / 60);
}

inline int minute_of_day(std::int64_t epoch_min) {
  std::int64_t mod = epoch_min % 1440;
  if (mod < 0) mod += 1440;
  return static_cast<int>(mod);
}

inline std::int64_t day_index(std::int64_t epoch_min) {
  return epoch_min >= 0 ? epoch_min / 1440 : (epoch_min - 1439) / 1440;
}

}  // namespace pahmm
