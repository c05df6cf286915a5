#pragma once

#include <cmath>

#include "pahmm/rng.hpp"

namespace pahmm {

// Exact PG(1, c) sampling via the alternating-series rejection scheme of
// Devroye (2009) as specialized by Polson, Scott & Windle (2013): draw from
// J*(1, |c|/2) and divide by 4. Exact, so no truncation bias enters the
// transition-coefficient updates. The density depends on c only through c^2;
// everything below works with z = |c|/2.

namespace pg_detail {

inline constexpr double kTrunc = 0.64;  // series crossover point

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// log Phi(x) that stays finite far into the left tail.
inline double log_norm_cdf(double x) {
  if (x > -8.0) return std::log(norm_cdf(x));
  // Asymptotic expansion of Mills' ratio.
  const double x2 = x * x;
  return -0.5 * x2 - 0.5 * std::log(2.0 * kPi) - std::log(-x) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// log P(X <= t) for X ~ inverse-Gaussian(mean 1/z, shape 1); z >= 0.
inline double log_pigauss(double t, double z) {
  const double rt = std::sqrt(t);
  const double a = log_norm_cdf((t * z - 1.0) / rt);
  const double b = 2.0 * z + log_norm_cdf(-(t * z + 1.0) / rt);
  const double hi = a > b ? a : b;
  return hi + std::log1p(std::exp((a > b ? b : a) - hi));
}

// Piecewise coefficients of the alternating series for the J*(1, .) density.
inline double series_coef(int n, double x) {
  const double np = n + 0.5;
  if (x > kTrunc)
    return kPi * np * std::exp(-np * np * kPi * kPi * 0.5 * x);
  return std::pow(2.0 / (kPi * x), 1.5) * kPi * np * std::exp(-2.0 * np * np / x);
}

// Inverse-Gaussian(mean 1/z, shape 1) truncated to (0, kTrunc).
inline double trunc_igauss(Rng& rng, double z) {
  const double t = kTrunc;
  double x = t + 1.0;
  if (1.0 / z > t) {
    // Small-z branch: rejection from a scaled inverse-chi-squared envelope.
    for (;;) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / t);
      x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      if (rng.uniform() <= std::exp(-0.5 * z * z * x)) return x;
    }
  }
  const double mu = 1.0 / z;
  while (x > t) {
    const double y = rng.normal();
    const double muy = mu * y * y;
    x = mu * (1.0 + 0.5 * muy - 0.5 * std::sqrt(4.0 * muy + muy * muy));
    if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
  }
  return x;
}

}  // namespace pg_detail

inline double sample_pg1(Rng& rng, double c) {
  using namespace pg_detail;
  const double z = 0.5 * std::fabs(c);
  const double t = kTrunc;
  const double k = kPi * kPi * 0.125 + 0.5 * z * z;
  // Mixture weights of the two proposal pieces (right tail / body).
  const double logp = std::log(0.5 * kPi / k) - k * t;
  const double logq = std::log(2.0) - z + log_pigauss(t, z);
  const double p_right = 1.0 / (1.0 + std::exp(logq - logp));
  for (;;) {
    double x;
    if (rng.uniform() < p_right)
      x = t + rng.exponential() / k;
    else
      x = trunc_igauss(rng, z);
    // Squeeze by partial sums of the alternating series.
    double s = series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n & 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

// E[PG(1, c)] = tanh(c/2) / (2c), continuously extended to 1/4 at c = 0.
inline double pg1_mean(double c) {
  const double a = std::fabs(c);
  if (a < 1e-8) return 0.25;
  return std::tanh(0.5 * a) / (2.0 * a);
}

}  // namespace pahmm
