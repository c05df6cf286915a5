#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pahmm/linalg.hpp"
#include "pahmm/pg.hpp"
#include "pahmm/rng.hpp"

namespace pahmm {

// Multinomial-logit transition coefficients. Row j of zeta concatenates the
// incoming-state intercepts (xi_{1j}, ..., xi_{Kj}) with the covariate slopes
// beta_j, so zeta(j, i) acts when the previous state is i and zeta(j, K + c)
// when covariate column c is active. Row K-1 is pinned to zero for
// identifiability; all probabilities are relative to transitioning into the
// last state.
struct TransitionParams {
  int K = 0;
  int p = 0;
  Mat zeta;  // K x (K + p)

  TransitionParams() = default;
  TransitionParams(int k, int p_) : K(k), p(p_), zeta(Mat::Zero(k, k + p_)) {}

  void check_identifiability() const {
    if (zeta.row(K - 1).cwiseAbs().maxCoeff() != 0.0)
      throw std::invalid_argument("zeta: last row must be identically zero");
  }
};

// One chain step as seen by the coefficient update: W_t = (Z_t, X_t) with
// Z_t the one-hot previous state and X_t an hour-dummy row holding at most a
// single 1. cov_col == -1 encodes the baseline hour (all-zero X_t).
struct ExtendedDesignRow {
  std::uint8_t prev_state = 0;
  std::int16_t cov_col = -1;
};

inline std::vector<double> dense_w_row(const ExtendedDesignRow& r, int K, int p) {
  std::vector<double> w(K + p, 0.0);
  w[r.prev_state] = 1.0;
  if (r.cov_col >= 0) w[K + r.cov_col] = 1.0;
  return w;
}

// q_{ij}(x): softmax over destinations of xi_{ij} + x' beta_j, max-subtracted.
inline Vec transition_probs(const TransitionParams& tp, int prev_state,
                            std::span<const double> x) {
  if (prev_state < 0 || prev_state >= tp.K)
    throw std::invalid_argument("transition_probs: previous state out of range");
  if (!tp.zeta.allFinite())
    throw std::invalid_argument("transition_probs: non-finite coefficients");
  Vec eta(tp.K);
  for (int j = 0; j < tp.K; ++j) {
    double e = tp.zeta(j, prev_state);
    for (int c = 0; c < tp.p; ++c) e += tp.zeta(j, tp.K + c) * x[c];
    eta[j] = e;
  }
  const double m = eta.maxCoeff();
  Vec probs = (eta.array() - m).exp();
  probs /= probs.sum();
  return probs;
}

inline Vec transition_probs(const TransitionParams& tp, int prev_state,
                            int cov_col) {
  std::vector<double> x(tp.p, 0.0);
  if (cov_col >= 0) x[cov_col] = 1.0;
  return transition_probs(tp, prev_state, x);
}

// Transition matrices by covariate slot, slot = cov_col + 1 (slot 0 is the
// baseline). Precomputed once per sweep so the state sweep is pure lookup.
// A homogeneous chain is the one-slot special case.
struct TransitionTable {
  int K = 0;
  int slots = 1;
  std::vector<double> q;     // slots x K x K
  std::vector<double> logq;

  const double* row(int slot, int i) const { return &q[(slot * K + i) * K]; }
  const double* logrow(int slot, int i) const { return &logq[(slot * K + i) * K]; }

  static TransitionTable from_zeta(const TransitionParams& tp) {
    TransitionTable t;
    t.K = tp.K;
    t.slots = tp.p + 1;
    t.q.resize(static_cast<std::size_t>(t.slots) * tp.K * tp.K);
    t.logq.resize(t.q.size());
    for (int s = 0; s < t.slots; ++s)
      for (int i = 0; i < tp.K; ++i) {
        const Vec pr = transition_probs(tp, i, s - 1);
        for (int j = 0; j < tp.K; ++j) {
          const std::size_t at = (static_cast<std::size_t>(s) * tp.K + i) * tp.K + j;
          t.q[at] = pr[j];
          t.logq[at] = std::log(pr[j]);
        }
      }
    return t;
  }

  static TransitionTable from_matrix(const Mat& qmat) {
    TransitionTable t;
    t.K = static_cast<int>(qmat.rows());
    t.slots = 1;
    t.q.resize(static_cast<std::size_t>(t.K) * t.K);
    t.logq.resize(t.q.size());
    for (int i = 0; i < t.K; ++i)
      for (int j = 0; j < t.K; ++j) {
        t.q[i * t.K + j] = qmat(i, j);
        t.logq[i * t.K + j] = std::log(qmat(i, j));
      }
    return t;
  }
};

// Gibbs update of one coefficient row via Polya-Gamma augmentation:
//   C_t = log sum_{k != j} exp(W_t zeta_k)
//   omega_t ~ PG(1, W_t zeta_j - C_t)
//   zeta_j | Omega ~ N(m_j, V_j),
//   V_j^{-1} = W' Omega W + I / sigma0_sq
//   m_j = V_j (W' ((I_j - 1/2) + Omega C) + zeta0 / sigma0_sq).
// The + Omega C term comes from expanding -omega (W zeta_j - C)^2 / 2: the
// offset enters the linear coefficient with a positive sign.
// W rows carry at most two ones, so the quadratic form accumulates in O(1)
// per timestep; C_t and W_t zeta_j take one table lookup per row because they
// depend on t only through (previous state, covariate slot).
inline void sample_zeta_row(int j, std::span<const ExtendedDesignRow> rows,
                            std::span<const std::uint8_t> dest,
                            TransitionParams& tp, const Vec& zeta0,
                            double sigma0_sq, Rng& rng) {
  const int K = tp.K;
  const int p = tp.p;
  const int n = K + p;
  if (j < 0 || j >= K - 1)
    throw std::invalid_argument("sample_zeta_row: row index must be in [0, K-2]");
  if (sigma0_sq <= 0.0) throw std::invalid_argument("sample_zeta_row: sigma0_sq <= 0");
  if (rows.size() != dest.size())
    throw std::invalid_argument("sample_zeta_row: rows/dest length mismatch");

  // psi[(slot, prev)] = W zeta_j - C, c_val[(slot, prev)] = C.
  const int nslots = p + 1;
  std::vector<double> psi(static_cast<std::size_t>(nslots) * K);
  std::vector<double> c_val(psi.size());
  std::vector<double> lp(K);
  for (int s = 0; s < nslots; ++s)
    for (int i = 0; i < K; ++i) {
      for (int k = 0; k < K; ++k) {
        double e = tp.zeta(k, i);
        if (s > 0) e += tp.zeta(k, K + s - 1);
        lp[k] = e;
      }
      double mx = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k)
        if (k != j && lp[k] > mx) mx = lp[k];
      double acc = 0.0;
      for (int k = 0; k < K; ++k)
        if (k != j) acc += std::exp(lp[k] - mx);
      const double c = mx + std::log(acc);
      const std::size_t at = static_cast<std::size_t>(s) * K + i;
      c_val[at] = c;
      psi[at] = lp[j] - c;
    }

  Mat vinv = Mat::Zero(n, n);
  Vec rhs = Vec::Zero(n);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const int i = rows[t].prev_state;
    const int col = rows[t].cov_col;
    const std::size_t at = static_cast<std::size_t>(col + 1) * K + i;
    const double omega = sample_pg1(rng, psi[at]);
    const double resp = (dest[t] == j ? 0.5 : -0.5) + omega * c_val[at];
    vinv(i, i) += omega;
    rhs[i] += resp;
    if (col >= 0) {
      const int c2 = K + col;
      vinv(c2, c2) += omega;
      vinv(i, c2) += omega;
      vinv(c2, i) += omega;
      rhs[c2] += resp;
    }
  }
  vinv.diagonal().array() += 1.0 / sigma0_sq;
  rhs += zeta0 / sigma0_sq;

  Mat prec_chol;
  try {
    prec_chol = chol_lower(vinv, "zeta precision");
  } catch (const NumericalError&) {
    throw NumericalError("sample_zeta_row: posterior precision for row " +
                         std::to_string(j + 1) + " not positive definite");
  }
  const Vec mean = prec_chol.transpose().triangularView<Eigen::Upper>().solve(
      prec_chol.triangularView<Eigen::Lower>().solve(rhs));
  tp.zeta.row(j) = mvn_draw_from_precision_chol(mean, prec_chol, rng).transpose();
}

// Conjugate update for the homogeneous baseline: row i ~ Dirichlet(alpha + n_i).
inline Mat sample_q_homogeneous(std::span<const ExtendedDesignRow> rows,
                                std::span<const std::uint8_t> dest, int K,
                                double alpha, Rng& rng) {
  if (alpha <= 0.0) throw std::invalid_argument("sample_q_homogeneous: alpha <= 0");
  Mat counts = Mat::Zero(K, K);
  for (std::size_t t = 0; t < rows.size(); ++t)
    counts(rows[t].prev_state, dest[t]) += 1.0;
  Mat q(K, K);
  std::vector<double> a(K), row(K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) a[j] = alpha + counts(i, j);
    rng.dirichlet(a.data(), K, row.data());
    for (int j = 0; j < K; ++j) q(i, j) = row[j];
  }
  return q;
}

// Transition pairs of a labelled chain: z has length T + 1 with z[0] the
// initial state. Segment restarts contribute no pair (their first element is
// drawn from the initial distribution, not from a transition).
inline void collect_transition_rows(std::span<const std::uint8_t> z,
                                    std::span<const std::int16_t> cols,
                                    std::span<const std::size_t> segment_starts,
                                    std::vector<ExtendedDesignRow>& rows,
                                    std::vector<std::uint8_t>& dest) {
  const std::size_t T = cols.size();
  std::size_t seg = 0;
  for (std::size_t r = 0; r < T; ++r) {
    if (seg + 1 < segment_starts.size() && segment_starts[seg + 1] == r) ++seg;
    if (r != 0 && r == segment_starts[seg]) continue;  // restart, no pair
    rows.push_back({z[r], cols[r]});
    dest.push_back(z[r + 1]);
  }
}

inline Mat sample_q_homogeneous(std::span<const std::uint8_t> z,
                                std::span<const std::size_t> segment_starts,
                                int K, double alpha, Rng& rng) {
  std::vector<ExtendedDesignRow> rows;
  std::vector<std::uint8_t> dest;
  std::vector<std::int16_t> cols(z.size() - 1, -1);
  collect_transition_rows(z, cols, segment_starts, rows, dest);
  return sample_q_homogeneous(rows, dest, K, alpha, rng);
}

}  // namespace pahmm
