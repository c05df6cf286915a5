#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pahmm/emissions.hpp"
#include "pahmm/rng.hpp"
#include "pahmm/transitions.hpp"

namespace pahmm {

// Single left-to-right single-site sweep over z[0..T]:
//   z_0      ~ pi_j q_{j, z_1}(x_1)
//   interior ~ q_{z_{t-1}, j}(x_t) f_j(y_t) q_{j, z_{t+1}}(x_{t+1})
// with the left factor replaced by pi at a segment restart and the right
// factor dropped at a segment end. Weights are handled in log space with max
// subtraction; step counts push f_j hundreds of log units apart across states.
inline void sample_states(std::span<const double> y, int d,
                          const EmissionCache& emis, const TransitionTable& qt,
                          std::span<const std::int16_t> cols,
                          std::span<const std::size_t> segment_starts,
                          std::span<const double> pi,
                          std::span<std::uint8_t> z, Rng& rng) {
  const std::size_t T = cols.size();
  if (z.size() != T + 1)
    throw std::invalid_argument("sample_states: z must have length T + 1");
  const int K = qt.K;
  std::vector<double> logpi(K);
  for (int j = 0; j < K; ++j) logpi[j] = std::log(pi[j]);

  std::vector<double> w(K), pw(K);
  auto draw = [&](std::size_t where) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < K; ++j) mx = std::max(mx, w[j]);
    if (!std::isfinite(mx))
      throw NumericalError("sample_states: degenerate weights at t = " +
                           std::to_string(where));
    for (int j = 0; j < K; ++j) pw[j] = std::exp(w[j] - mx);
    return static_cast<std::uint8_t>(rng.categorical(pw.data(), K));
  };

  // z_0 links only to the first row of the first segment.
  {
    const int slot = cols[0] + 1;
    for (int j = 0; j < K; ++j) w[j] = logpi[j] + qt.logrow(slot, j)[z[1]];
    z[0] = draw(0);
  }

  std::size_t seg = 0;
  for (std::size_t r = 0; r < T; ++r) {
    if (seg + 1 < segment_starts.size() && segment_starts[seg + 1] == r) ++seg;
    const bool restart = (r != 0) && (r == segment_starts[seg]);
    const bool seg_end =
        (r + 1 == T) ||
        (seg + 1 < segment_starts.size() && segment_starts[seg + 1] == r + 1);
    const int slot_in = cols[r] + 1;
    if (restart) {
      for (int j = 0; j < K; ++j) w[j] = logpi[j];
    } else {
      const double* lq = qt.logrow(slot_in, z[r]);
      for (int j = 0; j < K; ++j) w[j] = lq[j];
    }
    const double* yrow = &y[r * d];
    for (int j = 0; j < K; ++j) w[j] += emis.loglik_row(yrow, j);
    if (!seg_end) {
      const int slot_out = cols[r + 1] + 1;
      const std::uint8_t znext = z[r + 2];
      for (int j = 0; j < K; ++j) w[j] += qt.logrow(slot_out, j)[znext];
    }
    z[r + 1] = draw(r + 1);
  }
}

// Replaces every masked row with a fresh draw from its state's emission
// distribution; observed rows are never touched.
inline void impute_missing(std::span<double> y, int d,
                           std::span<const std::uint8_t> mask,
                           std::span<const std::uint8_t> z,
                           const EmissionCache& emis, Rng& rng) {
  const std::size_t T = mask.size();
  std::vector<double> eps(d);
  for (std::size_t r = 0; r < T; ++r) {
    if (!mask[r]) continue;
    const int j = z[r + 1];
    for (int c = 0; c < d; ++c) eps[c] = rng.normal();
    const Mat& l = emis.chol[j];
    const Vec& mu = emis.mean[j];
    for (int a = 0; a < d; ++a) {
      double v = mu[a];
      for (int b = 0; b <= a; ++b) v += l(a, b) * eps[b];
      y[r * d + a] = v;
    }
  }
}

// K-means-style initial labelling of the observed rows (standardized
// channels, k-means++ seeding, fixed Lloyd iterations), clusters ordered by
// raw step mean. Masked rows inherit the nearest preceding observed label, a
// masked prefix inherits the first observed one, and z_0 copies z_1. Falls
// back to uniform random labels when fewer than K distinct observed rows
// exist.
inline std::vector<std::uint8_t> init_states(std::span<const double> y, int d,
                                             std::span<const std::uint8_t> mask,
                                             int K, Rng& rng) {
  const std::size_t T = mask.size();
  std::vector<std::uint8_t> z(T + 1, 0);
  std::vector<std::size_t> obs;
  for (std::size_t t = 0; t < T; ++t)
    if (!mask[t]) obs.push_back(t);

  auto fallback = [&]() {
    for (std::size_t i = 0; i <= T; ++i)
      z[i] = static_cast<std::uint8_t>(rng.categorical(
          std::vector<double>(K, 1.0).data(), K));
    return z;
  };
  if (obs.size() < static_cast<std::size_t>(K)) return fallback();

  // Standardize observed rows channel-wise.
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (auto t : obs)
    for (int c = 0; c < d; ++c) mean[c] += y[t * d + c];
  for (int c = 0; c < d; ++c) mean[c] /= static_cast<double>(obs.size());
  for (auto t : obs)
    for (int c = 0; c < d; ++c) {
      const double v = y[t * d + c] - mean[c];
      sd[c] += v * v;
    }
  for (int c = 0; c < d; ++c)
    sd[c] = std::sqrt(sd[c] / std::max<std::size_t>(obs.size() - 1, 1));
  for (int c = 0; c < d; ++c)
    if (!(sd[c] > 0.0)) sd[c] = 1.0;
  std::vector<double> xs(obs.size() * d);
  for (std::size_t i = 0; i < obs.size(); ++i)
    for (int c = 0; c < d; ++c)
      xs[i * d + c] = (y[obs[i] * d + c] - mean[c]) / sd[c];

  // Distinct-row check against degenerate inputs.
  {
    std::vector<std::vector<double>> uniq;
    for (std::size_t i = 0; i < obs.size() && uniq.size() < static_cast<std::size_t>(K); ++i) {
      std::vector<double> row(xs.begin() + i * d, xs.begin() + (i + 1) * d);
      bool seen = false;
      for (const auto& u : uniq)
        if (std::equal(u.begin(), u.end(), row.begin(),
                       [](double a, double b) { return a == b; }))
          seen = true;
      if (!seen) uniq.push_back(std::move(row));
    }
    if (uniq.size() < static_cast<std::size_t>(K)) return fallback();
  }

  // k-means++ seeding.
  std::vector<double> centers(static_cast<std::size_t>(K) * d);
  std::vector<double> dist2(obs.size(), std::numeric_limits<double>::max());
  auto sqdist = [&](std::size_t i, const double* c) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      const double v = xs[i * d + a] - c[a];
      s += v * v;
    }
    return s;
  };
  const std::size_t first = static_cast<std::size_t>(rng.uniform() * obs.size());
  std::copy_n(&xs[first * d], d, centers.begin());
  for (int k = 1; k < K; ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      dist2[i] = std::min(dist2[i], sqdist(i, &centers[(k - 1) * d]));
      total += dist2[i];
    }
    double u = rng.uniform() * total;
    std::size_t pick = obs.size() - 1;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      u -= dist2[i];
      if (u <= 0.0) {
        pick = i;
        break;
      }
    }
    std::copy_n(&xs[pick * d], d, centers.begin() + k * d);
  }

  std::vector<int> label(obs.size(), 0);
  for (int iter = 0; iter < 25; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::max();
      for (int k = 0; k < K; ++k) {
        const double s = sqdist(i, &centers[k * d]);
        if (s < bd) {
          bd = s;
          best = k;
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    std::vector<double> acc(static_cast<std::size_t>(K) * d, 0.0);
    std::vector<std::size_t> cnt(K, 0);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      ++cnt[label[i]];
      for (int c = 0; c < d; ++c) acc[label[i] * d + c] += xs[i * d + c];
    }
    for (int k = 0; k < K; ++k)
      if (cnt[k])
        for (int c = 0; c < d; ++c) centers[k * d + c] = acc[k * d + c] / cnt[k];
    if (!changed) break;
  }

  // Order clusters by raw step mean so labels are comparable across runs.
  const int step_ch = d > 1 ? 1 : 0;
  std::vector<double> step_sum(K, 0.0);
  std::vector<std::size_t> cnt(K, 0);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    step_sum[label[i]] += y[obs[i] * d + step_ch];
    ++cnt[label[i]];
  }
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = cnt[a] ? step_sum[a] / cnt[a] : std::numeric_limits<double>::max();
    const double mb = cnt[b] ? step_sum[b] / cnt[b] : std::numeric_limits<double>::max();
    return ma < mb;
  });
  std::vector<int> rank(K);
  for (int r = 0; r < K; ++r) rank[order[r]] = r;

  // Scatter to the full grid: masked rows inherit the preceding observed
  // label; a masked prefix inherits the first observed one.
  std::vector<int> full(T, rank[label[0]]);
  std::size_t oi = 0;
  for (std::size_t t = 0; t < T; ++t) {
    if (oi < obs.size() && obs[oi] == t) {
      full[t] = rank[label[oi]];
      ++oi;
    } else if (t > 0 && oi > 0) {
      full[t] = full[t - 1];
    }
  }
  for (std::size_t t = 0; t < T; ++t) z[t + 1] = static_cast<std::uint8_t>(full[t]);
  z[0] = z[1];
  return z;
}

}  // namespace pahmm
