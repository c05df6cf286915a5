#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pahmm/emissions.hpp"
#include "pahmm/linalg.hpp"
#include "pahmm/rng.hpp"
#include "pahmm/series.hpp"

namespace pahmm {

// Hour-dependent missingness mechanism: p_l = (1 - gamma) p0 + gamma ph.
// p0 is constant across hours (the MCAR component), ph concentrates
// missingness in specific hours. The fitted model never sees these values.
struct MissingnessSpec {
  double gamma = 0.0;
  std::vector<double> p0;  // 24 entries, all equal
  std::vector<double> ph;  // 24 entries

  void validate() const {
    if (gamma < 0.0 || gamma > 1.0)
      throw std::invalid_argument("missingness: gamma must be in [0, 1]");
    if (p0.size() != 24 || ph.size() != 24)
      throw std::invalid_argument("missingness: need 24 hourly probabilities");
    for (int h = 0; h < 24; ++h) {
      if (p0[h] < 0 || p0[h] > 1 || ph[h] < 0 || ph[h] > 1)
        throw std::invalid_argument("missingness: probabilities must be in [0, 1]");
      if (p0[h] != p0[0])
        throw std::invalid_argument("missingness: p0 must be constant across hours");
    }
  }

  double prob_at_hour(int h) const {
    return (1.0 - gamma) * p0[h] + gamma * ph[h];
  }
};

// Hour-dependent state dynamics: per-hour transition rows are
// q0 + nu * qh(hour), renormalized to the simplex.
struct DynamicsSpec {
  double nu = 0.0;
  Mat q0;                  // K x K, hour-independent component
  std::vector<Mat> qh;     // 24 matrices, strongly hour-dependent component
  EmissionParams psi_true;
  int K = 3;
  std::size_t T = 0;

  void validate() const {
    if (nu < 0.0) throw std::invalid_argument("dynamics: nu must be >= 0");
    if (q0.rows() != K || q0.cols() != K || qh.size() != 24)
      throw std::invalid_argument("dynamics: dimension mismatch");
    if (psi_true.states() != K)
      throw std::invalid_argument("dynamics: psi_true must have K states");
  }

  std::vector<Mat> hourly_q() const {
    std::vector<Mat> out(24);
    for (int h = 0; h < 24; ++h) {
      Mat m = q0 + nu * qh[h];
      for (int i = 0; i < K; ++i) {
        const double s = m.row(i).sum();
        if (!(s > 0.0) || m.row(i).minCoeff() < 0.0)
          throw std::invalid_argument("dynamics: row not renormalizable at hour " +
                                      std::to_string(h));
        m.row(i) /= s;
      }
      out[h] = m;
    }
    return out;
  }
};

// Versioned fixture profiles. The hour shapes are scaled so the mean hourly
// missing probability hits the profile's target rate; they are this
// project's test fixtures, not published values.
inline MissingnessSpec missingness_profile(std::string_view name, double gamma) {
  double target;
  if (name == "mcar")
    target = 0.20;
  else if (name == "medium")
    target = 0.20;
  else if (name == "high")
    target = 0.40;
  else
    throw std::invalid_argument("unknown missingness profile: " + std::string(name));

  MissingnessSpec spec;
  spec.gamma = name == "mcar" ? 0.0 : gamma;
  spec.p0.assign(24, target);
  // Heavy where the daily routine switches states (early morning, evening,
  // overnight), light through the stable midday block.
  static constexpr double shape[24] = {
      0.70, 0.70, 0.70, 0.70, 0.70,        // 00-04 overnight
      0.80, 0.80, 0.80, 0.80, 0.80,        // 05-09 morning transitions
      0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05,  // 10-16 midday
      0.65, 0.65, 0.65, 0.65, 0.65,        // 17-21 evening transitions
      0.75, 0.75};                         // 22-23
  double mean = 0.0;
  for (double v : shape) mean += v;
  mean /= 24.0;
  spec.ph.resize(24);
  for (int h = 0; h < 24; ++h) {
    double v = shape[h] * target / mean;
    spec.ph[h] = v > 1.0 ? 1.0 : v;
  }
  spec.validate();
  return spec;
}

inline EmissionParams default_true_emissions() {
  // Channel order (hr, steps); hr is beats per 15-minute interval.
  EmissionParams psi;
  const double mu[3][2] = {{975.0, 8.0}, {1300.0, 130.0}, {1680.0, 420.0}};
  const double sd[3][2] = {{55.0, 10.0}, {80.0, 45.0}, {110.0, 90.0}};
  for (int j = 0; j < 3; ++j) {
    psi.mu.push_back(Vec(2));
    psi.mu.back() << mu[j][0], mu[j][1];
    Mat s(2, 2);
    const double cov = 0.3 * sd[j][0] * sd[j][1];
    s << sd[j][0] * sd[j][0], cov, cov, sd[j][1] * sd[j][1];
    psi.sigma.push_back(s);
  }
  return psi;
}

inline DynamicsSpec dynamics_profile(double nu, std::size_t T) {
  DynamicsSpec spec;
  spec.nu = nu;
  spec.K = 3;
  spec.T = T;
  spec.psi_true = default_true_emissions();
  // Mildly persistent hour-independent component; the hourly pattern, not
  // raw persistence, is what carries the routine signal.
  spec.q0 = Mat(3, 3);
  spec.q0 << 0.50, 0.30, 0.20,
             0.30, 0.45, 0.25,
             0.20, 0.35, 0.45;
  // Hour-targeted component: rows pile mass on the hour's characteristic
  // state. The routine alternates through several blocks a day (overnight
  // rest, morning ramp-up, midday activity, an early-evening rest, a late
  // activity block, evening wind-down), so clock time carries information
  // that plain persistence cannot. Row sums of 9 make the pattern dominate
  // q0 at nu = 1.
  auto target_state = [](int h) {
    if (h >= 22 || h <= 5) return 0;
    if (h <= 8) return 1;
    if (h <= 11) return 2;
    if (h <= 13) return 0;
    if (h <= 16) return 2;
    if (h <= 19) return 1;
    return 0;
  };
  spec.qh.resize(24);
  for (int h = 0; h < 24; ++h) {
    Mat m = Mat::Constant(3, 3, 0.18);
    m.col(target_state(h)).setConstant(8.64);
    spec.qh[h] = m;
  }
  spec.validate();
  return spec;
}

struct SimulatedTruth {
  PatientSeries series;              // complete, mask all zero
  std::vector<std::uint8_t> z_true;  // length T + 1
  std::vector<Mat> q_true;           // 24 per-hour transition matrices
};

// Forward simulation of the non-homogeneous chain and its emissions.
inline SimulatedTruth gen_synthetic(const DynamicsSpec& spec,
                                    std::int64_t start_minute, Rng& rng) {
  spec.validate();
  SimulatedTruth out;
  out.q_true = spec.hourly_q();
  const int K = spec.K;
  const int d = spec.psi_true.dim();
  out.series.d = d;
  out.series.t_min.resize(spec.T);
  for (std::size_t t = 0; t < spec.T; ++t)
    out.series.t_min[t] = start_minute + 15 * static_cast<std::int64_t>(t);
  out.series.mask.assign(spec.T, 0);
  out.series.y.resize(spec.T * d);
  out.series.segment_starts = {0};

  std::vector<Mat> chol(K);
  for (int j = 0; j < K; ++j)
    chol[j] = chol_lower(spec.psi_true.sigma[j], "simulated emissions");

  out.z_true.resize(spec.T + 1);
  std::vector<double> unif(K, 1.0);
  out.z_true[0] = static_cast<std::uint8_t>(rng.categorical(unif.data(), K));
  std::vector<double> row(K), eps(d);
  for (std::size_t t = 0; t < spec.T; ++t) {
    const int h = hour_of_minute(out.series.t_min[t]);
    const int prev = out.z_true[t];
    for (int j = 0; j < K; ++j) row[j] = out.q_true[h](prev, j);
    const int zt = rng.categorical(row.data(), K);
    out.z_true[t + 1] = static_cast<std::uint8_t>(zt);
    for (int c = 0; c < d; ++c) eps[c] = rng.normal();
    for (int a = 0; a < d; ++a) {
      double v = spec.psi_true.mu[zt][a];
      for (int b = 0; b <= a; ++b) v += chol[zt](a, b) * eps[b];
      out.series.y[t * d + a] = v;
    }
  }
  return out;
}

// A masked dataset plus its held-out ground truth. Fitting code accepts only
// the PatientSeries; the true values live here and nowhere else.
struct MaskedDataset {
  PatientSeries series;
  std::vector<std::size_t> masked_rows;
  std::vector<double> y_true;  // masked_rows.size() x d
};

inline MaskedDataset impose_missingness(const PatientSeries& complete,
                                        const MissingnessSpec& spec, Rng& rng) {
  spec.validate();
  for (auto m : complete.mask)
    if (m) throw std::invalid_argument("impose_missingness: series must be complete");
  MaskedDataset out;
  out.series = complete;
  for (std::size_t t = 0; t < complete.rows(); ++t) {
    const double p = spec.prob_at_hour(hour_of_minute(complete.t_min[t]));
    if (rng.uniform() < p) {
      out.masked_rows.push_back(t);
      for (int c = 0; c < complete.d; ++c) {
        out.y_true.push_back(complete.at(t, c));
        out.series.at(t, c) = kMissing;
      }
      out.series.mask[t] = 1;
    }
  }
  return out;
}

// Hybrid protocol: artificial missingness on top of a real low-missingness
// series. Rows that were already missing stay missing and never enter the
// ground-truth target set.
inline MaskedDataset hybrid_from_complete(const PatientSeries& series,
                                          const MissingnessSpec& spec, Rng& rng,
                                          double max_existing_rate = 0.05) {
  spec.validate();
  const double rate =
      series.rows() ? static_cast<double>(series.n_masked()) / series.rows() : 0.0;
  if (rate > max_existing_rate)
    throw std::runtime_error(
        "hybrid_from_complete: existing missing rate " + std::to_string(rate) +
        " exceeds ceiling " + std::to_string(max_existing_rate));
  MaskedDataset out;
  out.series = series;
  for (std::size_t t = 0; t < series.rows(); ++t) {
    if (series.mask[t]) continue;  // pre-existing gap: not a truth target
    const double p = spec.prob_at_hour(hour_of_minute(series.t_min[t]));
    if (rng.uniform() < p) {
      out.masked_rows.push_back(t);
      for (int c = 0; c < series.d; ++c) {
        out.y_true.push_back(series.at(t, c));
        out.series.at(t, c) = kMissing;
      }
      out.series.mask[t] = 1;
    }
  }
  return out;
}

}  // namespace pahmm
