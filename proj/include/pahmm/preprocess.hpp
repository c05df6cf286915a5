#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "pahmm/series.hpp"
#include "pahmm/time.hpp"

namespace pahmm {

// Minute-level device output. NaN marks a value the device did not deliver.
struct MinuteSeries {
  std::vector<std::int64_t> t_min;
  std::vector<double> hr;
  std::vector<double> steps;

  std::size_t rows() const { return t_min.size(); }

  void validate() const {
    if (hr.size() != rows() || steps.size() != rows())
      throw std::invalid_argument("minute series length mismatch");
    for (std::size_t t = 1; t < rows(); ++t)
      if (t_min[t] <= t_min[t - 1])
        throw std::invalid_argument("minute timestamps not strictly increasing");
    for (std::size_t t = 0; t < rows(); ++t)
      if (std::isfinite(steps[t]) && steps[t] < 0)
        throw std::invalid_argument("negative step count");
  }
};

// Choi-style wear detection on the minute grid. A minute is nonwear when it
// lies in a run of zero-step or absent minutes of total length >= window_len;
// up to spike_tolerance interior active spells of at most 2 minutes each are
// absorbed into the run. Gaps in the minute grid count as absent minutes.
inline std::vector<std::uint8_t> detect_nonwear(const MinuteSeries& m,
                                                int window_len = 90,
                                                int spike_tolerance = 2) {
  if (window_len < 1) throw std::invalid_argument("detect_nonwear: window_len < 1");
  m.validate();
  const std::size_t n = m.rows();
  std::vector<std::uint8_t> nonwear(n, 0);
  if (n == 0) return nonwear;

  // Work on the full minute timeline so grid gaps count as idle minutes.
  const std::int64_t t0 = m.t_min.front();
  const std::size_t span = static_cast<std::size_t>(m.t_min.back() - t0) + 1;
  std::vector<std::uint8_t> active(span, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (std::isfinite(m.steps[i]) && m.steps[i] > 0.0)
      active[static_cast<std::size_t>(m.t_min[i] - t0)] = 1;

  std::vector<std::uint8_t> marked(span, 0);
  std::size_t i = 0;
  while (i < span) {
    if (active[i]) {
      ++i;
      continue;
    }
    std::size_t end = i;  // run covers timeline positions [i, end]
    int spikes = 0;
    std::size_t j = i;
    while (j + 1 < span) {
      if (!active[j + 1]) {
        end = ++j;
        continue;
      }
      std::size_t k = j + 1;
      while (k < span && active[k]) ++k;
      const std::size_t spell = k - (j + 1);
      // Interior spells of <= 2 active minutes are absorbed, at most
      // spike_tolerance of them per run; a spell touching the end of the
      // timeline is not interior.
      if (spell <= 2 && spikes < spike_tolerance && k < span) {
        ++spikes;
        end = j = k;
        continue;
      }
      break;
    }
    if (end - i + 1 >= static_cast<std::size_t>(window_len))
      for (std::size_t a = i; a <= end; ++a) marked[a] = 1;
    i = end + 1;
  }
  for (std::size_t idx = 0; idx < n; ++idx)
    nonwear[idx] = marked[static_cast<std::size_t>(m.t_min[idx] - t0)];
  return nonwear;
}

// 15-minute aggregation: a window with >= 10 missing or nonwear minutes is
// labelled missing; otherwise each channel is the observed sum rescaled by
// 15 / n_observed. Missing minutes include minutes absent from the grid.
// mean_times_15 selects the algebraically equivalent (sum / n) * 15 ordering.
inline PatientSeries aggregate_15min(const MinuteSeries& m,
                                     const std::vector<std::uint8_t>& wear_mask,
                                     int missing_minute_limit = 10,
                                     bool mean_times_15 = false) {
  if (wear_mask.size() != m.rows())
    throw std::invalid_argument("aggregate_15min: wear mask misaligned");
  PatientSeries out;
  out.d = 2;
  if (m.rows() == 0) return out;

  const std::int64_t first_win = m.t_min.front() / 15;
  const std::int64_t last_win = m.t_min.back() / 15;
  const std::size_t n_win = static_cast<std::size_t>(last_win - first_win + 1);
  std::vector<double> hr_sum(n_win, 0.0), st_sum(n_win, 0.0);
  std::vector<int> n_obs(n_win, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (wear_mask[i]) continue;  // nonwear minutes are treated as missing
    if (!std::isfinite(m.hr[i]) || !std::isfinite(m.steps[i])) continue;
    const std::size_t wi = static_cast<std::size_t>(m.t_min[i] / 15 - first_win);
    hr_sum[wi] += m.hr[i];
    st_sum[wi] += m.steps[i];
    ++n_obs[wi];
  }
  out.t_min.reserve(n_win);
  out.y.reserve(n_win * 2);
  out.mask.reserve(n_win);
  for (std::size_t wi = 0; wi < n_win; ++wi) {
    out.t_min.push_back((first_win + static_cast<std::int64_t>(wi)) * 15);
    const int missing_minutes = 15 - n_obs[wi];
    if (missing_minutes >= missing_minute_limit) {
      out.mask.push_back(1);
      out.y.push_back(kMissing);
      out.y.push_back(kMissing);
    } else {
      out.mask.push_back(0);
      const double n = static_cast<double>(n_obs[wi]);
      if (mean_times_15) {
        out.y.push_back((hr_sum[wi] / n) * 15.0);
        out.y.push_back((st_sum[wi] / n) * 15.0);
      } else {
        out.y.push_back(hr_sum[wi] * 15.0 / n);
        out.y.push_back(st_sum[wi] * 15.0 / n);
      }
    }
  }
  out.segment_starts = compute_segment_starts(out.t_min);
  return out;
}

struct DayFilterResult {
  PatientSeries series;
  std::vector<std::int64_t> retained_days;
  std::vector<std::int64_t> dropped_days;
};

// Drops whole calendar days with fewer than min_hours of observed intervals
// whose start lies inside [window_start_min, window_end_min) minutes of day.
inline DayFilterResult filter_days(const PatientSeries& s, double min_hours = 5.0,
                                   int window_start_min = 8 * 60,
                                   int window_end_min = 20 * 60) {
  std::map<std::int64_t, double> observed_hours;
  for (std::size_t t = 0; t < s.rows(); ++t) {
    const std::int64_t day = day_index(s.t_min[t]);
    observed_hours.try_emplace(day, 0.0);
    if (s.mask[t]) continue;
    const int mod = minute_of_day(s.t_min[t]);
    if (mod >= window_start_min && mod < window_end_min)
      observed_hours[day] += 0.25;
  }
  DayFilterResult res;
  res.series.d = s.d;
  for (const auto& [day, hours] : observed_hours)
    (hours >= min_hours ? res.retained_days : res.dropped_days).push_back(day);
  for (std::size_t t = 0; t < s.rows(); ++t) {
    const std::int64_t day = day_index(s.t_min[t]);
    if (observed_hours[day] < min_hours) continue;
    res.series.t_min.push_back(s.t_min[t]);
    for (int c = 0; c < s.d; ++c) res.series.y.push_back(s.at(t, c));
    res.series.mask.push_back(s.mask[t]);
  }
  res.series.segment_starts = compute_segment_starts(res.series.t_min);
  return res;
}

inline bool check_eligibility(std::size_t retained_days, std::size_t min_days = 30) {
  return retained_days >= min_days;
}

}  // namespace pahmm
