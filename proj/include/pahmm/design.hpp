#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pahmm/time.hpp"

namespace pahmm {

// Column of the dummy block for a given clock hour; -1 for the baseline hour,
// which is encoded as an all-zero row.
inline int hour_column(int hour, int baseline_hour) {
  if (hour == baseline_hour) return -1;
  return hour < baseline_hour ? hour : hour - 1;
}

// Hour-of-day dummy design: 23 columns for the 24 hours, the baseline hour
// dropped. Stored compactly as one column index per row; x()/row() expand on
// demand.
struct DesignMatrix {
  int baseline_hour = 12;
  int p = 23;
  std::vector<int> hour_of;        // per row, 0..23
  std::vector<std::int16_t> col;   // per row, -1 for baseline

  std::size_t rows() const { return col.size(); }
  double x(std::size_t t, int k) const { return col[t] == k ? 1.0 : 0.0; }

  std::vector<double> row(std::size_t t) const {
    std::vector<double> r(p, 0.0);
    if (col[t] >= 0) r[col[t]] = 1.0;
    return r;
  }
};

inline DesignMatrix build_design_matrix(std::span<const std::int64_t> t_min,
                                        int baseline_hour) {
  if (baseline_hour < 0 || baseline_hour > 23)
    throw std::invalid_argument("baseline_hour must be in [0, 23]");
  if (t_min.empty()) throw std::invalid_argument("empty timestamp sequence");
  DesignMatrix dm;
  dm.baseline_hour = baseline_hour;
  dm.hour_of.reserve(t_min.size());
  dm.col.reserve(t_min.size());
  for (auto m : t_min) {
    const int h = hour_of_minute(m);
    dm.hour_of.push_back(h);
    dm.col.push_back(static_cast<std::int16_t>(hour_column(h, baseline_hour)));
  }
  return dm;
}

}  // namespace pahmm
