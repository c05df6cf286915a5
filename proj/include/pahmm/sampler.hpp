#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pahmm/config.hpp"
#include "pahmm/design.hpp"
#include "pahmm/emissions.hpp"
#include "pahmm/latent.hpp"
#include "pahmm/series.hpp"
#include "pahmm/transitions.hpp"

namespace pahmm {

// Pseudo-days regularizing the coefficient posterior: for each replicate and
// each state, one synthetic day with that state held at every quarter-hour
// slot, so every state is represented at every hour exactly `strength` times.
// Observations are generated once from the exploratory-phase emission
// estimates and then treated as observed data.
struct AugmentedData {
  int d = 0;
  int K = 0;
  int strength = 0;
  int day_len = 96;
  std::vector<double> y;           // rows x d
  std::vector<std::uint8_t> z;     // fixed state per row
  std::vector<int> hour;           // clock hour per row, cycling one day
  std::vector<std::size_t> day_starts;

  std::size_t rows() const { return z.size(); }
};

inline AugmentedData build_augmentation(const EmissionParams& psi_hat,
                                        int aug_strength, int K, int day_len,
                                        Rng& rng) {
  if (aug_strength < 0)
    throw std::invalid_argument("build_augmentation: aug_strength must be >= 0");
  AugmentedData a;
  a.K = K;
  a.strength = aug_strength;
  a.day_len = day_len;
  if (aug_strength == 0) return a;
  a.d = psi_hat.dim();
  std::vector<Mat> chol(K);
  for (int j = 0; j < K; ++j)
    chol[j] = chol_lower(psi_hat.sigma[j], "augmentation emission");
  std::vector<double> eps(a.d);
  for (int rep = 0; rep < aug_strength; ++rep)
    for (int j = 0; j < K; ++j) {
      a.day_starts.push_back(a.z.size());
      for (int s = 0; s < day_len; ++s) {
        a.z.push_back(static_cast<std::uint8_t>(j));
        a.hour.push_back((s * 24) / day_len);
        for (int c = 0; c < a.d; ++c) eps[c] = rng.normal();
        for (int x = 0; x < a.d; ++x) {
          double v = psi_hat.mu[j][x];
          for (int b = 0; b <= x; ++b) v += chol[j](x, b) * eps[b];
          a.y.push_back(v);
        }
      }
    }
  return a;
}

// Saved post-burn-in state of one chain. zeta is populated for the NHMM,
// qmat for the homogeneous baseline; pseudo-data rows never appear here.
struct PosteriorDraws {
  std::string model;  // "nhmm" or "hmm"
  int K = 0;
  int d = 0;
  int p = 0;
  std::size_t T = 0;
  int baseline_hour = -1;
  std::uint64_t seed = 0;
  std::string config_hash;
  int first_saved_iter = 0;
  std::vector<int> saved_iters;
  std::vector<std::size_t> masked_rows;

  std::vector<double> zeta;        // n x K x (K+p)
  std::vector<double> qmat;        // n x K x K
  std::vector<double> mu;          // n x K x d
  std::vector<double> sigma;       // n x K x d x d
  std::vector<std::uint8_t> z;     // n x (T+1)
  std::vector<double> imputed;     // n x masked x d

  std::size_t n_draws() const { return saved_iters.size(); }
  std::size_t zeta_stride() const { return static_cast<std::size_t>(K) * (K + p); }
  std::size_t q_stride() const { return static_cast<std::size_t>(K) * K; }
  std::size_t mu_stride() const { return static_cast<std::size_t>(K) * d; }
  std::size_t sigma_stride() const { return static_cast<std::size_t>(K) * d * d; }

  std::span<const double> zeta_draw(std::size_t i) const {
    return {zeta.data() + i * zeta_stride(), zeta_stride()};
  }
  std::span<const double> q_draw(std::size_t i) const {
    return {qmat.data() + i * q_stride(), q_stride()};
  }
  std::span<const double> mu_draw(std::size_t i) const {
    return {mu.data() + i * mu_stride(), mu_stride()};
  }
  std::span<const double> sigma_draw(std::size_t i) const {
    return {sigma.data() + i * sigma_stride(), sigma_stride()};
  }
  std::span<const std::uint8_t> z_draw(std::size_t i) const {
    return {z.data() + i * (T + 1), T + 1};
  }
  std::span<const double> imputed_draw(std::size_t i) const {
    const std::size_t stride = masked_rows.size() * d;
    return {imputed.data() + i * stride, stride};
  }

  TransitionParams zeta_params(std::size_t i) const {
    TransitionParams tp(K, p);
    auto zd = zeta_draw(i);
    for (int r = 0; r < K; ++r)
      for (int c = 0; c < K + p; ++c) tp.zeta(r, c) = zd[r * (K + p) + c];
    return tp;
  }
};

namespace sampler_detail {

// Per-state moments of the observed rows under an initial labelling; states
// short on data borrow the pooled moments. Used to seed imputations before
// the first sweep and to back augmentation when no exploratory phase ran.
inline EmissionParams moment_estimates(std::span<const double> y, int d,
                                       std::span<const std::uint8_t> mask,
                                       std::span<const std::uint8_t> z, int K) {
  EmissionStats pooled(1, d), per(K, d);
  const std::size_t T = mask.size();
  for (std::size_t t = 0; t < T; ++t) {
    if (mask[t]) continue;
    pooled.add_row(&y[t * d], 0);
    per.add_row(&y[t * d], z[t + 1]);
  }
  pooled.finish();
  per.finish();
  auto cov_of = [&](const EmissionStats& st, int j) {
    const double n = st.n[j];
    Vec mean = st.sum[j] / n;
    Mat cov = (st.sumsq[j] - n * (mean * mean.transpose())) / std::max(n - 1.0, 1.0);
    cov = 0.5 * (cov + cov.transpose()).eval();
    cov.diagonal().array() += 1e-6 * (cov.diagonal().maxCoeff() + 1.0);
    return std::pair<Vec, Mat>(mean, cov);
  };
  if (pooled.n[0] < 2)
    throw std::invalid_argument("fit: fewer than two observed rows");
  const auto [gmean, gcov] = cov_of(pooled, 0);
  EmissionParams out;
  out.mu.resize(K);
  out.sigma.resize(K);
  for (int j = 0; j < K; ++j) {
    if (per.n[j] >= d + 2) {
      auto [m, c] = cov_of(per, j);
      out.mu[j] = m;
      out.sigma[j] = c;
    } else {
      out.mu[j] = gmean;
      out.sigma[j] = gcov;
    }
  }
  return out;
}

inline NiwHyper resolve_niw(const ModelConfig& cfg, std::span<const double> y,
                            int d, std::span<const std::uint8_t> mask) {
  NiwHyper h = default_niw_from_observed(y, d, mask);
  h.kappa0 = cfg.niw_kappa0;
  if (cfg.niw_nu0 > 0) h.nu0 = cfg.niw_nu0;
  if (!cfg.niw_mu0.empty()) {
    if (static_cast<int>(cfg.niw_mu0.size()) != d)
      throw std::invalid_argument("config: niw_mu0 dimension mismatch");
    for (int c = 0; c < d; ++c) h.mu0[c] = cfg.niw_mu0[c];
  }
  if (!cfg.niw_lambda0_diag.empty()) {
    if (static_cast<int>(cfg.niw_lambda0_diag.size()) != d)
      throw std::invalid_argument("config: niw_lambda0_diag dimension mismatch");
    h.lambda0 = Mat::Zero(d, d);
    for (int c = 0; c < d; ++c) h.lambda0(c, c) = cfg.niw_lambda0_diag[c];
  }
  h.validate(d);
  return h;
}

}  // namespace sampler_detail

// Picks the default baseline hour: the clock hour with the largest count of
// state changes between adjacent observed rows under an exploratory k-means
// labelling. An hour rich in observed transitions is the least exposed to
// separation.
inline int choose_baseline_hour(const PatientSeries& s, int K, Rng& rng) {
  const auto z = init_states(s.y, s.d, s.mask, K, rng);
  std::vector<long> changes(24, 0);
  for (std::size_t t = 1; t < s.rows(); ++t) {
    if (s.mask[t] || s.mask[t - 1]) continue;
    if (s.t_min[t] - s.t_min[t - 1] > 15) continue;
    if (z[t + 1] != z[t]) ++changes[s.hour_of(t)];
  }
  int best = 12;
  long best_count = -1;
  for (int h = 0; h < 24; ++h)
    if (changes[h] > best_count) {
      best_count = changes[h];
      best = h;
    }
  return best_count > 0 ? best : 12;
}

namespace sampler_detail {

struct FitWorkspace {
  int K = 0, d = 0, p = 0;
  std::size_t T = 0;
  std::vector<double> y;  // mutable copy; masked rows re-imputed every sweep
  std::span<const std::uint8_t> mask;
  std::vector<std::int16_t> cols;
  std::span<const std::size_t> segments;
  std::vector<double> pi;
  std::vector<std::uint8_t> z;

  AugmentedData aug;
  std::vector<ExtendedDesignRow> aug_rows;  // fixed pseudo transition pairs
  std::vector<std::uint8_t> aug_dest;

  NiwHyper hyper;
  bool kappa_scaled_mean = true;

  std::vector<ExtendedDesignRow> rows_buf;
  std::vector<std::uint8_t> dest_buf;

  EmissionParams emis;

  void accumulate_stats(EmissionStats& st, bool with_aug) const {
    for (std::size_t t = 0; t < T; ++t) st.add_row(&y[t * d], z[t + 1]);
    if (with_aug)
      for (std::size_t r = 0; r < aug.rows(); ++r)
        st.add_row(&aug.y[r * d], aug.z[r]);
    st.finish();
  }

  void collect_rows(bool with_aug) {
    rows_buf.clear();
    dest_buf.clear();
    collect_transition_rows(z, cols, segments, rows_buf, dest_buf);
    if (with_aug) {
      rows_buf.insert(rows_buf.end(), aug_rows.begin(), aug_rows.end());
      dest_buf.insert(dest_buf.end(), aug_dest.begin(), aug_dest.end());
    }
  }
};

// One full Gibbs sweep, NHMM flavor: (Sigma, mu) for all states, then the
// missing rows, then each free zeta row, then the state sequence.
inline void sweep_nhmm(FitWorkspace& w, TransitionParams& tp, const Vec& zeta0,
                       double sigma0_sq, bool with_aug, Rng& rng) {
  EmissionStats st(w.K, w.d);
  w.accumulate_stats(st, with_aug);
  w.emis = sample_emission_params(st, w.hyper, rng, w.kappa_scaled_mean);
  EmissionCache cache(w.emis);
  impute_missing(w.y, w.d, w.mask, w.z, cache, rng);
  w.collect_rows(with_aug);
  for (int j = 0; j + 1 < w.K; ++j)
    sample_zeta_row(j, w.rows_buf, w.dest_buf, tp, zeta0, sigma0_sq, rng);
  const TransitionTable table = TransitionTable::from_zeta(tp);
  sample_states(w.y, w.d, cache, table, w.cols, w.segments, w.pi, w.z, rng);
}

inline void sweep_hmm(FitWorkspace& w, Mat& q, double alpha,
                      const std::vector<std::int16_t>& flat_cols, Rng& rng) {
  EmissionStats st(w.K, w.d);
  w.accumulate_stats(st, false);
  w.emis = sample_emission_params(st, w.hyper, rng, w.kappa_scaled_mean);
  EmissionCache cache(w.emis);
  impute_missing(w.y, w.d, w.mask, w.z, cache, rng);
  w.collect_rows(false);
  q = sample_q_homogeneous(w.rows_buf, w.dest_buf, w.K, alpha, rng);
  const TransitionTable table = TransitionTable::from_matrix(q);
  sample_states(w.y, w.d, cache, table, flat_cols, w.segments, w.pi, w.z, rng);
}

inline FitWorkspace make_workspace(const PatientSeries& series,
                                   const ModelConfig& cfg, int p,
                                   std::vector<std::int16_t> cols, Rng& rng) {
  FitWorkspace w;
  w.K = cfg.K;
  w.d = series.d;
  w.p = p;
  w.T = series.rows();
  w.y = series.y;
  w.mask = series.mask;
  w.cols = std::move(cols);
  w.segments = series.segment_starts;
  w.pi = cfg.resolved_pi();
  w.kappa_scaled_mean = cfg.kappa_scaled_mean;
  w.hyper = resolve_niw(cfg, w.y, w.d, w.mask);

  w.z = init_states(w.y, w.d, w.mask, w.K, rng);
  const EmissionParams init_psi = moment_estimates(w.y, w.d, w.mask, w.z, w.K);
  EmissionCache cache(init_psi);
  impute_missing(w.y, w.d, w.mask, w.z, cache, rng);
  w.emis = init_psi;
  return w;
}

inline void save_draw(PosteriorDraws& out, const FitWorkspace& w, int iter,
                      const TransitionParams* tp, const Mat* q) {
  out.saved_iters.push_back(iter);
  if (tp)
    for (int r = 0; r < w.K; ++r)
      for (int c = 0; c < w.K + w.p; ++c) out.zeta.push_back(tp->zeta(r, c));
  if (q)
    for (int r = 0; r < w.K; ++r)
      for (int c = 0; c < w.K; ++c) out.qmat.push_back((*q)(r, c));
  for (int j = 0; j < w.K; ++j)
    for (int c = 0; c < w.d; ++c) out.mu.push_back(w.emis.mu[j][c]);
  for (int j = 0; j < w.K; ++j)
    for (int a = 0; a < w.d; ++a)
      for (int b = 0; b < w.d; ++b) out.sigma.push_back(w.emis.sigma[j](a, b));
  out.z.insert(out.z.end(), w.z.begin(), w.z.end());
  for (auto t : out.masked_rows)
    for (int c = 0; c < w.d; ++c) out.imputed.push_back(w.y[t * w.d + c]);
}

}  // namespace sampler_detail

// Full NHMM chain: initialization, init_iters exploratory sweeps on the
// observed data, construction of the augmentation pseudo-days from the
// exploratory emission means, then burn_iters + iters sweeps on the
// augmented data with the last `iters` saved. Pseudo rows enter only the
// emission statistics and the coefficient update; nothing derived from them
// is stored.
inline PosteriorDraws run_nhmm(const PatientSeries& series,
                               const DesignMatrix& design,
                               const ModelConfig& cfg, Rng& rng) {
  using namespace sampler_detail;
  cfg.validate();
  require_valid(series);
  if (design.rows() != series.rows())
    throw std::invalid_argument("run_nhmm: design/series row mismatch");

  FitWorkspace w = make_workspace(series, cfg, design.p, design.col, rng);
  TransitionParams tp(cfg.K, design.p);
  const Vec zeta0 = Vec::Constant(cfg.K + design.p, cfg.zeta0);

  PosteriorDraws out;
  out.model = "nhmm";
  out.K = cfg.K;
  out.d = w.d;
  out.p = design.p;
  out.T = w.T;
  out.baseline_hour = design.baseline_hour;
  out.seed = cfg.seed;
  out.config_hash = cfg.config_hash();
  out.first_saved_iter = cfg.init_iters + cfg.burn_iters + 1;
  for (std::size_t t = 0; t < w.T; ++t)
    if (w.mask[t]) out.masked_rows.push_back(t);

  int iter = 0;
  std::vector<Vec> mu_sum(cfg.K, Vec::Zero(w.d));
  std::vector<Mat> sig_sum(cfg.K, Mat::Zero(w.d, w.d));
  for (int i = 0; i < cfg.init_iters; ++i) {
    ++iter;
    sweep_nhmm(w, tp, zeta0, cfg.sigma0_sq, false, rng);
    for (int j = 0; j < cfg.K; ++j) {
      mu_sum[j] += w.emis.mu[j];
      sig_sum[j] += w.emis.sigma[j];
    }
  }

  if (cfg.aug_strength > 0) {
    EmissionParams psi_hat;
    if (cfg.init_iters > 0) {
      psi_hat.mu.resize(cfg.K);
      psi_hat.sigma.resize(cfg.K);
      for (int j = 0; j < cfg.K; ++j) {
        psi_hat.mu[j] = mu_sum[j] / cfg.init_iters;
        psi_hat.sigma[j] = sig_sum[j] / cfg.init_iters;
      }
    } else {
      psi_hat = moment_estimates(w.y, w.d, w.mask, w.z, cfg.K);
    }
    w.aug = build_augmentation(psi_hat, cfg.aug_strength, cfg.K, cfg.day_len, rng);
    // Pseudo transition pairs are fixed for the whole run. The pseudo block
    // is one contiguous stretch of synthetic days, so consecutive days chain:
    // the day boundaries contribute the only cross-state pseudo transitions,
    // landing on the first slot's hour. Only the real/pseudo boundary is a
    // restart.
    for (std::size_t r = 1; r < w.aug.rows(); ++r) {
      w.aug_rows.push_back(
          {w.aug.z[r - 1], static_cast<std::int16_t>(
                               hour_column(w.aug.hour[r], design.baseline_hour))});
      w.aug_dest.push_back(w.aug.z[r]);
    }
  }

  const bool with_aug = cfg.aug_strength > 0;
  const std::size_t reserve = static_cast<std::size_t>(cfg.iters);
  out.zeta.reserve(reserve * out.zeta_stride());
  out.mu.reserve(reserve * out.mu_stride());
  out.sigma.reserve(reserve * out.sigma_stride());
  out.z.reserve(reserve * (w.T + 1));
  out.imputed.reserve(reserve * out.masked_rows.size() * w.d);
  for (int i = 0; i < cfg.burn_iters + cfg.iters; ++i) {
    ++iter;
    try {
      sweep_nhmm(w, tp, zeta0, cfg.sigma0_sq, with_aug, rng);
    } catch (const NumericalError& e) {
      throw NumericalError("run_nhmm: sweep " + std::to_string(iter) + ": " +
                           e.what());
    }
    if (iter > cfg.init_iters + cfg.burn_iters)
      save_draw(out, w, iter, &tp, nullptr);
  }
  return out;
}

// Homogeneous comparator: identical sweep structure with the coefficient
// update replaced by the Dirichlet draw and constant transition lookups.
// Never uses the augmentation prior.
inline PosteriorDraws run_hmm(const PatientSeries& series,
                              const ModelConfig& cfg, Rng& rng) {
  using namespace sampler_detail;
  cfg.validate();
  require_valid(series);

  std::vector<std::int16_t> flat_cols(series.rows(), -1);
  FitWorkspace w = make_workspace(series, cfg, 0, flat_cols, rng);
  Mat q = Mat::Constant(cfg.K, cfg.K, 1.0 / cfg.K);

  PosteriorDraws out;
  out.model = "hmm";
  out.K = cfg.K;
  out.d = w.d;
  out.p = 0;
  out.T = w.T;
  out.baseline_hour = -1;
  out.seed = cfg.seed;
  out.config_hash = cfg.config_hash();
  out.first_saved_iter = cfg.init_iters + cfg.burn_iters + 1;
  for (std::size_t t = 0; t < w.T; ++t)
    if (w.mask[t]) out.masked_rows.push_back(t);

  int iter = 0;
  for (int i = 0; i < cfg.init_iters + cfg.burn_iters + cfg.iters; ++i) {
    ++iter;
    try {
      sweep_hmm(w, q, cfg.dirichlet_alpha, flat_cols, rng);
    } catch (const NumericalError& e) {
      throw NumericalError("run_hmm: sweep " + std::to_string(iter) + ": " +
                           e.what());
    }
    if (iter > cfg.init_iters + cfg.burn_iters)
      save_draw(out, w, iter, nullptr, &q);
  }
  return out;
}

// Post-hoc label identification: each draw is permuted so states sort by
// ascending step-count mean. For the NHMM this permutes both the row (the
// destination) and the intercept columns of zeta, then re-zeroes the last
// row by subtracting it from all rows; the softmax is invariant to that
// shift, so transition probabilities are exactly the permuted originals.
inline void relabel_draws_by_step_mean(PosteriorDraws& draws,
                                       int step_channel = 1) {
  const int K = draws.K;
  const int d = draws.d;
  const int p = draws.p;
  const std::size_t npar = static_cast<std::size_t>(K) + p;
  std::vector<double> tmp;
  for (std::size_t i = 0; i < draws.n_draws(); ++i) {
    EmissionParams ep;
    ep.mu.resize(K);
    ep.sigma.resize(K);
    double* mu_i = draws.mu.data() + i * draws.mu_stride();
    double* sig_i = draws.sigma.data() + i * draws.sigma_stride();
    for (int j = 0; j < K; ++j) {
      ep.mu[j] = Eigen::Map<Vec>(mu_i + j * d, d);
      ep.sigma[j] = Eigen::Map<Mat>(sig_i + j * d * d, d, d);
    }
    const std::vector<int> perm = order_states(ep, step_channel);
    bool ident = true;
    for (int j = 0; j < K; ++j) ident &= (perm[j] == j);
    if (ident) continue;
    std::vector<int> rank(K);
    for (int r = 0; r < K; ++r) rank[perm[r]] = r;

    tmp.assign(mu_i, mu_i + draws.mu_stride());
    for (int r = 0; r < K; ++r)
      for (int c = 0; c < d; ++c) mu_i[r * d + c] = tmp[perm[r] * d + c];
    tmp.assign(sig_i, sig_i + draws.sigma_stride());
    for (int r = 0; r < K; ++r)
      for (int c = 0; c < d * d; ++c)
        sig_i[r * d * d + c] = tmp[perm[r] * d * d + c];

    std::uint8_t* z_i = draws.z.data() + i * (draws.T + 1);
    for (std::size_t t = 0; t <= draws.T; ++t)
      z_i[t] = static_cast<std::uint8_t>(rank[z_i[t]]);

    if (!draws.zeta.empty()) {
      double* zeta_i = draws.zeta.data() + i * draws.zeta_stride();
      tmp.assign(zeta_i, zeta_i + draws.zeta_stride());
      auto old_at = [&](int r, int c) { return tmp[r * npar + c]; };
      for (int r = 0; r < K; ++r) {
        for (int c = 0; c < K; ++c)
          zeta_i[r * npar + c] = old_at(perm[r], perm[c]);
        for (int c = 0; c < p; ++c)
          zeta_i[r * npar + K + c] = old_at(perm[r], K + c);
      }
      for (std::size_t c = 0; c < npar; ++c) {
        const double pivot = zeta_i[(K - 1) * npar + c];
        for (int r = 0; r < K; ++r) zeta_i[r * npar + c] -= pivot;
      }
    }
    if (!draws.qmat.empty()) {
      double* q_i = draws.qmat.data() + i * draws.q_stride();
      tmp.assign(q_i, q_i + draws.q_stride());
      for (int r = 0; r < K; ++r)
        for (int c = 0; c < K; ++c) q_i[r * K + c] = tmp[perm[r] * K + perm[c]];
    }
  }
}

}  // namespace pahmm
