#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "pahmm/linalg.hpp"
#include "pahmm/rng.hpp"

namespace pahmm {

// Normal-inverse-Wishart prior for one state's (mu, Sigma).
struct NiwHyper {
  Vec mu0;
  double kappa0 = 0.01;
  double nu0 = 4.0;
  Mat lambda0;

  void validate(int d) const {
    if (kappa0 <= 0.0) throw std::invalid_argument("NIW: kappa0 must be > 0");
    if (nu0 <= d - 1) throw std::invalid_argument("NIW: nu0 must exceed d - 1");
    if (mu0.size() != d || lambda0.rows() != d || lambda0.cols() != d)
      throw std::invalid_argument("NIW: hyperparameter dimension mismatch");
  }
};

struct EmissionParams {
  std::vector<Vec> mu;
  std::vector<Mat> sigma;

  int states() const { return static_cast<int>(mu.size()); }
  int dim() const { return mu.empty() ? 0 : static_cast<int>(mu.front().size()); }
};

inline double emission_loglik(const Vec& y, const Vec& mu, const Mat& sigma) {
  const int d = static_cast<int>(y.size());
  const Mat l = chol_lower(sigma, "emission covariance");
  const Vec w = l.triangularView<Eigen::Lower>().solve(y - mu);
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += std::log(l(i, i));
  return -0.5 * w.squaredNorm() - logdet - 0.5 * d * std::log(2.0 * kPi);
}

// Per-sweep prepared emission quantities: Cholesky factors for draws and
// precision terms for fast row log-likelihoods in the state sweep.
struct EmissionCache {
  int d = 0;
  std::vector<Mat> chol;       // lower factors of sigma_j
  std::vector<Mat> prec;       // sigma_j^{-1}
  std::vector<Vec> mean;
  std::vector<double> log_const;  // -log|L| - d/2 log(2 pi)

  explicit EmissionCache(const EmissionParams& p) {
    d = p.dim();
    const int k = p.states();
    chol.reserve(k);
    prec.reserve(k);
    mean = p.mu;
    log_const.reserve(k);
    for (int j = 0; j < k; ++j) {
      Mat l = chol_lower(p.sigma[j], "emission covariance");
      double logdet_half = 0.0;
      for (int i = 0; i < d; ++i) logdet_half += std::log(l(i, i));
      log_const.push_back(-logdet_half - 0.5 * d * std::log(2.0 * kPi));
      prec.push_back(p.sigma[j].llt().solve(Mat::Identity(d, d)));
      chol.push_back(std::move(l));
    }
  }

  double loglik_row(const double* yrow, int j) const {
    double q = 0.0;
    const Mat& pj = prec[j];
    const Vec& mj = mean[j];
    for (int a = 0; a < d; ++a) {
      const double da = yrow[a] - mj[a];
      for (int b = 0; b < d; ++b) q += da * pj(a, b) * (yrow[b] - mj[b]);
    }
    return -0.5 * q + log_const[j];
  }
};

// Running per-state moments: counts, sums and sums of outer products.
struct EmissionStats {
  int k = 0;
  int d = 0;
  std::vector<double> n;
  std::vector<Vec> sum;
  std::vector<Mat> sumsq;

  EmissionStats(int k_, int d_) : k(k_), d(d_) {
    n.assign(k, 0.0);
    sum.assign(k, Vec::Zero(d));
    sumsq.assign(k, Mat::Zero(d, d));
  }

  void add_row(const double* yrow, int state) {
    n[state] += 1.0;
    Vec& s = sum[state];
    Mat& q = sumsq[state];
    for (int a = 0; a < d; ++a) {
      s[a] += yrow[a];
      for (int b = 0; b <= a; ++b) q(a, b) += yrow[a] * yrow[b];
    }
  }

  void finish() {
    for (int j = 0; j < k; ++j)
      for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) sumsq[j](a, b) = sumsq[j](b, a);
  }
};

// labels[i] gives the state of row i of y; rows and labels must align.
inline EmissionStats accumulate_moments(std::span<const double> y, int d,
                                        std::span<const std::uint8_t> labels,
                                        int k) {
  EmissionStats st(k, d);
  const std::size_t rows = labels.size();
  for (std::size_t i = 0; i < rows; ++i) st.add_row(&y[i * d], labels[i]);
  st.finish();
  return st;
}

// Conjugate NIW update, one state at a time:
//   Sigma_j ~ Inv-Wishart(nu0 + n_j, Lambda_n),
//   mu_j | Sigma_j ~ N(mu_n, Sigma_j / kappa_n).
// States with no assigned rows fall back to a prior draw. Setting
// kappa_scaled_mean = false reproduces the mu_j | Sigma_j ~ N(mu_n, Sigma_j)
// variant (no kappa_n in the conditional variance).
inline EmissionParams sample_emission_params(const EmissionStats& st,
                                             const NiwHyper& hyper, Rng& rng,
                                             bool kappa_scaled_mean = true) {
  const int d = st.d;
  hyper.validate(d);
  EmissionParams out;
  out.mu.resize(st.k);
  out.sigma.resize(st.k);
  for (int j = 0; j < st.k; ++j) {
    const double n = st.n[j];
    const double kappa_n = hyper.kappa0 + n;
    const double nu_n = hyper.nu0 + n;
    Vec ybar = n > 0 ? Vec((st.sum[j] / n).eval()) : hyper.mu0;
    Vec mu_n = (hyper.kappa0 * hyper.mu0 + n * ybar) / kappa_n;
    Mat scatter = Mat::Zero(d, d);
    if (n > 0) scatter = st.sumsq[j] - n * (ybar * ybar.transpose());
    const Vec dev = ybar - hyper.mu0;
    Mat lambda_n = hyper.lambda0 + scatter +
                   (hyper.kappa0 * n / kappa_n) * (dev * dev.transpose());
    lambda_n = 0.5 * (lambda_n + lambda_n.transpose()).eval();
    Mat sigma;
    try {
      sigma = inverse_wishart_draw(nu_n, lambda_n, rng);
    } catch (const NumericalError&) {
      // One jitter-and-retry before giving up.
      lambda_n.diagonal().array() +=
          1e-8 * (lambda_n.diagonal().cwiseAbs().maxCoeff() + 1.0);
      sigma = inverse_wishart_draw(nu_n, lambda_n, rng);
    }
    const double mean_scale = kappa_scaled_mean ? 1.0 / kappa_n : 1.0;
    const Mat l = chol_lower((sigma * mean_scale).eval(), "emission mean draw");
    out.sigma[j] = std::move(sigma);
    out.mu[j] = mvn_draw(mu_n, l, rng);
  }
  return out;
}

// Weakly informative defaults built from the observed rows: column means,
// column variances on the scale diagonal, nu0 = d + 2, kappa0 = 0.01.
inline NiwHyper default_niw_from_observed(std::span<const double> y, int d,
                                          std::span<const std::uint8_t> mask) {
  NiwHyper h;
  h.mu0 = Vec::Zero(d);
  h.lambda0 = Mat::Identity(d, d);
  h.nu0 = d + 2.0;
  h.kappa0 = 0.01;
  const std::size_t rows = mask.size();
  double n = 0.0;
  Vec s = Vec::Zero(d), s2 = Vec::Zero(d);
  for (std::size_t t = 0; t < rows; ++t) {
    if (mask[t]) continue;
    n += 1.0;
    for (int c = 0; c < d; ++c) {
      s[c] += y[t * d + c];
      s2[c] += y[t * d + c] * y[t * d + c];
    }
  }
  if (n >= 2.0) {
    h.mu0 = s / n;
    for (int c = 0; c < d; ++c) {
      const double var = (s2[c] - n * h.mu0[c] * h.mu0[c]) / (n - 1.0);
      h.lambda0(c, c) = var > 1e-12 ? var : 1.0;
    }
  }
  return h;
}

// Permutation ordering states by ascending step-count mean (channel 1), so
// that state 0 reads as sedentary and state K-1 as high activity. Ties break
// on heart rate, then on the original index.
inline std::vector<int> order_states(const EmissionParams& params,
                                     int step_channel = 1, int hr_channel = 0) {
  const int k = params.states();
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    const double sa = params.mu[a][step_channel];
    const double sb = params.mu[b][step_channel];
    if (sa != sb) return sa < sb;
    if (params.dim() > hr_channel && params.mu[a][hr_channel] != params.mu[b][hr_channel])
      return params.mu[a][hr_channel] < params.mu[b][hr_channel];
    return a < b;
  });
  return perm;  // perm[rank] = original state with that rank
}

}  // namespace pahmm
