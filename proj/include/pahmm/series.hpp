#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pahmm/time.hpp"

namespace pahmm {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Quarter-hour multivariate activity series for one patient. Rows with
// mask[t] == 1 hold NaN placeholders and are imputation targets only; the
// NaN makes any accidental read of a masked value visible immediately.
struct PatientSeries {
  std::vector<std::int64_t> t_min;  // epoch minutes, strictly increasing
  int d = 2;                        // channels: 0 = heart rate, 1 = steps
  std::vector<double> y;            // rows() x d, row-major
  std::vector<std::uint8_t> mask;   // 1 = missing
  std::vector<std::size_t> segment_starts;  // 15-min contiguity breaks; [0] first

  std::size_t rows() const { return t_min.size(); }
  double at(std::size_t t, int c) const { return y[t * d + c]; }
  double& at(std::size_t t, int c) { return y[t * d + c]; }

  std::size_t n_masked() const {
    std::size_t n = 0;
    for (auto m : mask) n += m;
    return n;
  }

  int hour_of(std::size_t t) const { return hour_of_minute(t_min[t]); }
};

// A segment starts wherever the calendar gap to the previous row exceeds the
// sampling step. Each segment restarts the latent chain from the initial
// distribution.
inline std::vector<std::size_t> compute_segment_starts(
    const std::vector<std::int64_t>& t_min, std::int64_t step_min = 15) {
  std::vector<std::size_t> starts;
  if (t_min.empty()) return starts;
  starts.push_back(0);
  for (std::size_t t = 1; t < t_min.size(); ++t)
    if (t_min[t] - t_min[t - 1] > step_min) starts.push_back(t);
  return starts;
}

// Non-fatal invariant violations are returned as messages; an empty vector
// means the series is well formed. Length mismatches between the parallel
// arrays make every index suspect and throw instead.
inline std::vector<std::string> validate_series(const PatientSeries& s) {
  if (s.y.size() != s.rows() * static_cast<std::size_t>(s.d) ||
      s.mask.size() != s.rows())
    throw std::invalid_argument(
        "series length mismatch: y/mask/timestamps disagree");
  std::vector<std::string> issues;
  if (s.d < 1) issues.push_back("channel count d < 1");
  for (std::size_t t = 1; t < s.rows(); ++t)
    if (s.t_min[t] <= s.t_min[t - 1]) {
      issues.push_back("timestamps not strictly increasing at row " +
                       std::to_string(t));
      break;
    }
  for (std::size_t t = 0; t < s.rows(); ++t) {
    if (s.mask[t]) continue;
    for (int c = 0; c < s.d; ++c)
      if (!std::isfinite(s.at(t, c))) {
        issues.push_back("non-finite value in observed row " +
                         std::to_string(t) + " channel " + std::to_string(c));
        break;
      }
  }
  if (s.segment_starts.empty() || s.segment_starts.front() != 0) {
    if (s.rows() > 0) issues.push_back("segment_starts must begin with 0");
  }
  return issues;
}

inline void require_valid(const PatientSeries& s) {
  auto issues = validate_series(s);
  if (!issues.empty()) throw std::invalid_argument("invalid series: " + issues.front());
}

}  // namespace pahmm
