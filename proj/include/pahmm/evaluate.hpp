#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "pahmm/linalg.hpp"
#include "pahmm/sampler.hpp"
#include "pahmm/series.hpp"
#include "pahmm/transitions.hpp"

namespace pahmm {

struct QuantileSummary {
  double median = 0.0;
  double lo90 = 0.0;
  double hi90 = 0.0;
};

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty vector");
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline QuantileSummary summarize90(const std::vector<double>& v) {
  return {quantile(v, 0.5), quantile(v, 0.05), quantile(v, 0.95)};
}

// Per-draw, per-channel RMSE of the imputed values against the held-out
// truth at the artificially masked rows.
inline std::vector<std::vector<double>> rmse_imputation(
    std::span<const double> y_true, const PosteriorDraws& draws) {
  const std::size_t m = draws.masked_rows.size();
  const int d = draws.d;
  if (y_true.size() != m * d)
    throw std::invalid_argument("rmse_imputation: truth/masked index mismatch");
  std::vector<std::vector<double>> out(d);
  for (auto& ch : out) ch.reserve(draws.n_draws());
  for (std::size_t i = 0; i < draws.n_draws(); ++i) {
    auto imp = draws.imputed_draw(i);
    for (int c = 0; c < d; ++c) {
      double sse = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        const double e = imp[r * d + c] - y_true[r * d + c];
        sse += e * e;
      }
      out[c].push_back(m ? std::sqrt(sse / static_cast<double>(m)) : 0.0);
    }
  }
  return out;
}

// Mean over hours of the Frobenius distance between true and estimated
// per-hour transition matrices.
inline double frobenius_avg(std::span<const Mat> q_true, std::span<const Mat> q_est) {
  if (q_true.size() != q_est.size() || q_true.empty())
    throw std::invalid_argument("frobenius_avg: hour count mismatch");
  double acc = 0.0;
  for (std::size_t h = 0; h < q_true.size(); ++h) {
    if (q_true[h].rows() != q_est[h].rows() || q_true[h].cols() != q_est[h].cols())
      throw std::invalid_argument("frobenius_avg: matrix dimension mismatch");
    acc += (q_true[h] - q_est[h]).norm();
  }
  return acc / static_cast<double>(q_true.size());
}

// Posterior-mean per-hour transition matrices implied by the stored draws:
// softmax of zeta at each hour for the NHMM, the constant Q for the baseline.
inline std::vector<Mat> posterior_mean_hourly_q(const PosteriorDraws& draws) {
  std::vector<Mat> acc(24, Mat::Zero(draws.K, draws.K));
  if (draws.n_draws() == 0) throw std::invalid_argument("no draws");
  if (draws.model == "nhmm") {
    for (std::size_t i = 0; i < draws.n_draws(); ++i) {
      const TransitionParams tp = draws.zeta_params(i);
      for (int h = 0; h < 24; ++h) {
        const int col = hour_column(h, draws.baseline_hour);
        for (int from = 0; from < draws.K; ++from)
          acc[h].row(from) += transition_probs(tp, from, col).transpose();
      }
    }
  } else {
    Mat q = Mat::Zero(draws.K, draws.K);
    for (std::size_t i = 0; i < draws.n_draws(); ++i) {
      auto qd = draws.q_draw(i);
      for (int r = 0; r < draws.K; ++r)
        for (int c = 0; c < draws.K; ++c) q(r, c) += qd[r * draws.K + c];
    }
    for (int h = 0; h < 24; ++h) acc[h] = q;
  }
  for (auto& m : acc) m /= static_cast<double>(draws.n_draws());
  return acc;
}

// K x 24 matrix of state-membership probability by clock hour, pooled over
// draws and timesteps. Hours with no timesteps get NaN columns.
struct HourlyMarginals {
  Mat prob;                    // K x 24
  std::vector<bool> defined;   // per hour

  int states() const { return static_cast<int>(prob.rows()); }
};

inline HourlyMarginals hourly_marginals(const PosteriorDraws& draws,
                                        std::span<const std::int64_t> t_min) {
  if (draws.n_draws() == 0) throw std::invalid_argument("hourly_marginals: no draws");
  if (t_min.size() != draws.T)
    throw std::invalid_argument("hourly_marginals: timestamp count mismatch");
  HourlyMarginals hm;
  hm.prob = Mat::Zero(draws.K, 24);
  hm.defined.assign(24, false);
  std::vector<double> totals(24, 0.0);
  for (std::size_t i = 0; i < draws.n_draws(); ++i) {
    auto z = draws.z_draw(i);
    for (std::size_t t = 0; t < draws.T; ++t) {
      const int h = hour_of_minute(t_min[t]);
      hm.prob(z[t + 1], h) += 1.0;
      totals[h] += 1.0;
    }
  }
  for (int h = 0; h < 24; ++h) {
    if (totals[h] > 0.0) {
      hm.prob.col(h) /= totals[h];
      hm.defined[h] = true;
    } else {
      hm.prob.col(h).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return hm;
}

// Single-path marginals (e.g. of the generating truth) in the same layout.
inline HourlyMarginals hourly_marginals_path(std::span<const std::uint8_t> z,
                                             std::span<const std::int64_t> t_min,
                                             int K) {
  HourlyMarginals hm;
  hm.prob = Mat::Zero(K, 24);
  hm.defined.assign(24, false);
  std::vector<double> totals(24, 0.0);
  for (std::size_t t = 0; t + 1 < z.size(); ++t) {
    const int h = hour_of_minute(t_min[t]);
    hm.prob(z[t + 1], h) += 1.0;
    totals[h] += 1.0;
  }
  for (int h = 0; h < 24; ++h) {
    if (totals[h] > 0.0) {
      hm.prob.col(h) /= totals[h];
      hm.defined[h] = true;
    } else {
      hm.prob.col(h).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return hm;
}

// Mean over defined hours of the Euclidean distance between estimated and
// reference per-hour membership probabilities.
inline double marginal_distance(const HourlyMarginals& est,
                                const HourlyMarginals& ref) {
  if (est.states() != ref.states())
    throw std::invalid_argument("marginal_distance: state count mismatch");
  double acc = 0.0;
  int n = 0;
  for (int h = 0; h < 24; ++h) {
    if (!est.defined[h] || !ref.defined[h]) continue;
    acc += (est.prob.col(h) - ref.prob.col(h)).norm();
    ++n;
  }
  if (n == 0) throw std::invalid_argument("marginal_distance: no defined hours");
  return acc / n;
}

struct StateAccuracy {
  double overall = 0.0;
  double masked_only = 0.0;
};

// Mean over draws of the label-permutation-maximized match rate against the
// true path; the permutation maximizing the overall rate is also applied to
// the masked-rows-only rate so both use one labelling per draw.
inline StateAccuracy state_accuracy(std::span<const std::uint8_t> z_true,
                                    const PosteriorDraws& draws) {
  const int K = draws.K;
  if (K > 6) throw std::invalid_argument("state_accuracy: K > 6 not supported");
  if (z_true.size() != draws.T + 1)
    throw std::invalid_argument("state_accuracy: true path length mismatch");
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::uint8_t> is_masked(draws.T, 0);
  for (auto r : draws.masked_rows) is_masked[r] = 1;
  const double n_masked = static_cast<double>(draws.masked_rows.size());

  StateAccuracy acc;
  for (std::size_t i = 0; i < draws.n_draws(); ++i) {
    auto z = draws.z_draw(i);
    // Confusion counts over t = 1..T (z_0 has no observation row).
    Mat conf = Mat::Zero(K, K);
    Mat conf_masked = Mat::Zero(K, K);
    for (std::size_t t = 0; t < draws.T; ++t) {
      conf(z[t + 1], z_true[t + 1]) += 1.0;
      if (is_masked[t]) conf_masked(z[t + 1], z_true[t + 1]) += 1.0;
    }
    double best = -1.0, best_masked = -1.0;
    for (const auto& pm : perms) {
      double hits = 0.0, hits_masked = 0.0;
      for (int j = 0; j < K; ++j) {
        hits += conf(j, pm[j]);
        hits_masked += conf_masked(j, pm[j]);
      }
      // Masked hits break ties so the statistic is label-order independent.
      if (hits > best || (hits == best && hits_masked > best_masked)) {
        best = hits;
        best_masked = hits_masked;
      }
    }
    acc.overall += best / static_cast<double>(draws.T);
    if (n_masked > 0) acc.masked_only += best_masked / n_masked;
  }
  acc.overall /= static_cast<double>(draws.n_draws());
  acc.masked_only /= static_cast<double>(draws.n_draws());
  return acc;
}

// Hour-to-hour changes of the most-represented state across the daily cycle,
// evaluated cyclically (hour 23 wraps to hour 0). Undefined hours are
// skipped in the cycle.
inline int count_mode_changes(const HourlyMarginals& hm) {
  std::vector<int> modes;
  for (int h = 0; h < 24; ++h) {
    if (!hm.defined[h]) continue;
    int mode = 0;
    for (int k = 1; k < hm.states(); ++k)
      if (hm.prob(k, h) > hm.prob(mode, h)) mode = k;
    modes.push_back(mode);
  }
  if (modes.size() < 2) return 0;
  int c = 0;
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i] != modes[(i + 1) % modes.size()]) ++c;
  return c;
}

// Routine-strength coefficient: c * prod_k (max_l p(k|l) - min_l p(k|l)).
inline double routine_strength(const HourlyMarginals& hm, int c) {
  double prod = 1.0;
  for (int k = 0; k < hm.states(); ++k) {
    double lo = std::numeric_limits<double>::max();
    double hi = -std::numeric_limits<double>::max();
    for (int h = 0; h < 24; ++h) {
      if (!hm.defined[h]) continue;
      lo = std::min(lo, hm.prob(k, h));
      hi = std::max(hi, hm.prob(k, h));
    }
    prod *= (hi - lo);
  }
  return static_cast<double>(c) * prod;
}

inline double routine_strength(const HourlyMarginals& hm) {
  return routine_strength(hm, count_mode_changes(hm));
}

// Physical-activity summaries per draw, plus raw-data comparators computed
// from the observed rows only. States must already be relabelled so that
// state 0 is sedentary.
struct ActivitySummaries {
  std::vector<double> daily_steps;        // per draw: mean daily total steps
  std::vector<double> hr_per_min;         // per draw: channel sum / (slots x 15)
  std::vector<double> prob_sedentary;     // per draw
  std::vector<double> night_bout_len;     // per draw, quarter-hours; NaN if no bout
  double raw_daily_steps = 0.0;           // observed rows only
  double raw_hr_per_min = 0.0;            // per-day observed means, averaged
  std::size_t n_days = 0;
};

inline ActivitySummaries activity_summaries(const PosteriorDraws& draws,
                                            const PatientSeries& series,
                                            int night_start_hour = 22,
                                            int night_end_hour = 8) {
  if (series.rows() != draws.T)
    throw std::invalid_argument("activity_summaries: series/draws mismatch");
  ActivitySummaries out;
  std::vector<std::int64_t> days;
  for (std::size_t t = 0; t < draws.T; ++t) days.push_back(day_index(series.t_min[t]));
  std::vector<std::int64_t> uniq = days;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  out.n_days = uniq.size();
  if (out.n_days == 0) return out;
  const double n_days = static_cast<double>(out.n_days);

  auto in_night = [&](int h) {
    return night_start_hour <= night_end_hour
               ? (h >= night_start_hour && h < night_end_hour)
               : (h >= night_start_hour || h < night_end_hour);
  };

  // Raw comparators (no imputation): steps totals over observed rows; HR as
  // the per-day mean of per-minute rates over observed rows.
  {
    double step_total = 0.0;
    std::vector<double> day_hr_sum, day_hr_n;
    day_hr_sum.assign(uniq.size(), 0.0);
    day_hr_n.assign(uniq.size(), 0.0);
    for (std::size_t t = 0; t < draws.T; ++t) {
      if (series.mask[t]) continue;
      step_total += series.at(t, 1);
      const std::size_t di = static_cast<std::size_t>(
          std::lower_bound(uniq.begin(), uniq.end(), days[t]) - uniq.begin());
      day_hr_sum[di] += series.at(t, 0) / 15.0;
      day_hr_n[di] += 1.0;
    }
    out.raw_daily_steps = step_total / n_days;
    double acc = 0.0;
    double nd = 0.0;
    for (std::size_t di = 0; di < uniq.size(); ++di)
      if (day_hr_n[di] > 0.0) {
        acc += day_hr_sum[di] / day_hr_n[di];
        nd += 1.0;
      }
    out.raw_hr_per_min = nd > 0 ? acc / nd : 0.0;
  }

  const double slot_minutes = static_cast<double>(draws.T) * 15.0;
  const int dch = draws.d;
  for (std::size_t i = 0; i < draws.n_draws(); ++i) {
    auto z = draws.z_draw(i);
    auto imp = draws.imputed_draw(i);
    // Imputed-complete channel sums.
    double hr_total = 0.0, step_total = 0.0;
    std::size_t mi = 0;
    for (std::size_t t = 0; t < draws.T; ++t) {
      double hr, st;
      if (series.mask[t]) {
        hr = imp[mi * dch + 0];
        st = imp[mi * dch + 1];
        ++mi;
      } else {
        hr = series.at(t, 0);
        st = series.at(t, 1);
      }
      hr_total += hr;
      step_total += st;
    }
    out.daily_steps.push_back(step_total / n_days);
    out.hr_per_min.push_back(hr_total / slot_minutes);

    double sed = 0.0;
    for (std::size_t t = 0; t < draws.T; ++t)
      if (z[t + 1] == 0) sed += 1.0;
    out.prob_sedentary.push_back(sed / static_cast<double>(draws.T));

    // Night sedentary bouts: maximal runs of sedentary quarter-hours inside
    // the night window, broken by calendar gaps and window exits.
    double bout_sum = 0.0;
    int n_bouts = 0;
    int cur = 0;
    for (std::size_t t = 0; t < draws.T; ++t) {
      const bool contiguous = t > 0 && series.t_min[t] - series.t_min[t - 1] == 15;
      const bool sed_night = in_night(series.hour_of(t)) && z[t + 1] == 0;
      if (sed_night && (cur == 0 || contiguous)) {
        ++cur;
      } else {
        if (cur > 0) {
          bout_sum += cur;
          ++n_bouts;
        }
        cur = sed_night ? 1 : 0;
      }
    }
    if (cur > 0) {
      bout_sum += cur;
      ++n_bouts;
    }
    out.night_bout_len.push_back(
        n_bouts ? bout_sum / n_bouts : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

// Batch-means effective sample size. A constant chain is flagged by
// degenerate = true and ESS = 0.
struct EssResult {
  double ess = 0.0;
  bool degenerate = false;
};

inline EssResult effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 100) throw std::invalid_argument("effective_sample_size: need >= 100 draws");
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : chain) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  if (!(var > 1e-14 * (mean * mean + 1.0))) return {0.0, true};

  const std::size_t b = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const std::size_t nb = n / b;
  double bm_var = 0.0;
  double bm_mean = 0.0;
  std::vector<double> bmeans(nb, 0.0);
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = 0; j < b; ++j) bmeans[i] += chain[i * b + j];
    bmeans[i] /= static_cast<double>(b);
    bm_mean += bmeans[i];
  }
  bm_mean /= static_cast<double>(nb);
  for (double v : bmeans) bm_var += (v - bm_mean) * (v - bm_mean);
  bm_var /= static_cast<double>(nb - 1);
  const double tau_var = static_cast<double>(b) * bm_var;  // var of sqrt(n) x mean
  if (!(tau_var > 0.0)) return {0.0, true};
  return {static_cast<double>(n) * var / tau_var, false};
}

// Autocorrelation-based ESS (Geyer's initial positive sequence). Slower than
// batch means but unbiased for chains whose autocorrelation time approaches
// sqrt(N), where batch means with root-N batches overestimates ESS.
inline double ess_autocorr(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 100) throw std::invalid_argument("ess_autocorr: need >= 100 draws");
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : chain) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);
  if (!(c0 > 1e-14 * (mean * mean + 1.0))) return 0.0;
  auto gamma_at = [&](std::size_t k) {
    double g = 0.0;
    for (std::size_t t = 0; t + k < n; ++t)
      g += (chain[t] - mean) * (chain[t + k] - mean);
    return g / (static_cast<double>(n) * c0);
  };
  double tau = 1.0;
  for (std::size_t k = 1; k + 1 < n / 2; k += 2) {
    const double pair = gamma_at(k) + gamma_at(k + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return static_cast<double>(n) / tau;
}

// Named scalar-parameter traces for export and ESS reporting.
struct ParamTrace {
  std::string name;
  std::vector<double> values;
};

inline std::vector<ParamTrace> parameter_traces(const PosteriorDraws& draws) {
  std::vector<ParamTrace> out;
  const std::size_t n = draws.n_draws();
  auto add = [&](std::string name) -> std::vector<double>& {
    out.push_back({std::move(name), {}});
    out.back().values.reserve(n);
    return out.back().values;
  };
  if (draws.model == "nhmm") {
    const std::size_t npar = static_cast<std::size_t>(draws.K) + draws.p;
    for (int r = 0; r + 1 < draws.K; ++r)
      for (std::size_t c = 0; c < npar; ++c) {
        std::string nm =
            c < static_cast<std::size_t>(draws.K)
                ? "xi[" + std::to_string(c + 1) + "," + std::to_string(r + 1) + "]"
                : "beta[" + std::to_string(r + 1) + "," +
                      std::to_string(c - draws.K + 1) + "]";
        auto& v = add(std::move(nm));
        for (std::size_t i = 0; i < n; ++i)
          v.push_back(draws.zeta_draw(i)[r * npar + c]);
      }
  } else {
    for (int r = 0; r < draws.K; ++r)
      for (int c = 0; c < draws.K; ++c) {
        auto& v = add("q[" + std::to_string(r + 1) + "," + std::to_string(c + 1) + "]");
        for (std::size_t i = 0; i < n; ++i)
          v.push_back(draws.q_draw(i)[r * draws.K + c]);
      }
  }
  for (int j = 0; j < draws.K; ++j)
    for (int c = 0; c < draws.d; ++c) {
      auto& v = add("mu[" + std::to_string(j + 1) + "," + std::to_string(c + 1) + "]");
      for (std::size_t i = 0; i < n; ++i)
        v.push_back(draws.mu_draw(i)[j * draws.d + c]);
    }
  for (int j = 0; j < draws.K; ++j)
    for (int a = 0; a < draws.d; ++a)
      for (int b = a; b < draws.d; ++b) {
        auto& v = add("sigma[" + std::to_string(j + 1) + "," + std::to_string(a + 1) +
                      "," + std::to_string(b + 1) + "]");
        for (std::size_t i = 0; i < n; ++i)
          v.push_back(draws.sigma_draw(i)[(j * draws.d + a) * draws.d + b]);
      }
  return out;
}

}  // namespace pahmm
