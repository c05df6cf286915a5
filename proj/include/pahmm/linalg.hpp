#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "pahmm/rng.hpp"

namespace pahmm {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lower Cholesky factor of an SPD matrix; one jitter retry on failure.
inline Mat chol_lower(const Mat& a, const char* what) {
  Eigen::LLT<Mat> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double jitter = 1e-10 * (a.diagonal().cwiseAbs().maxCoeff() + 1.0);
  Mat aj = a;
  aj.diagonal().array() += jitter;
  Eigen::LLT<Mat> llt2(aj);
  if (llt2.info() == Eigen::Success) return llt2.matrixL();
  throw NumericalError(std::string(what) + ": matrix not positive definite");
}

inline Vec mvn_draw(const Vec& mean, const Mat& cov_chol_lower, Rng& rng) {
  Vec eps(mean.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  return mean + cov_chol_lower * eps;
}

// Draw x ~ N(mean, P^{-1}) given the lower Cholesky factor L of the
// precision P: solve L' x = eps.
inline Vec mvn_draw_from_precision_chol(const Vec& mean, const Mat& prec_chol_lower,
                                        Rng& rng) {
  Vec eps(mean.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  return mean + prec_chol_lower.transpose()
                    .triangularView<Eigen::Upper>()
                    .solve(eps);
}

// Wishart(nu, S) via the Bartlett decomposition; S passed as its lower
// Cholesky factor. Returns L_S A, so that W = (L_S A)(L_S A)'.
inline Mat wishart_factor(double nu, const Mat& scale_chol_lower, Rng& rng) {
  const Eigen::Index d = scale_chol_lower.rows();
  Mat a = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(nu - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  return scale_chol_lower * a;
}

// Sigma ~ Inv-Wishart(nu, Lambda): draw W ~ Wishart(nu, Lambda^{-1}) and
// invert. Requires nu > d - 1.
inline Mat inverse_wishart_draw(double nu, const Mat& lambda, Rng& rng) {
  const Eigen::Index d = lambda.rows();
  const Mat lam_chol = chol_lower(lambda, "inverse_wishart scale");
  // Lambda^{-1} = L^{-T} L^{-1}; its lower Cholesky factor is L^{-T} only up
  // to orientation, so factor the explicit inverse instead (d is small here).
  const Mat lam_inv = lam_chol.triangularView<Eigen::Lower>()
                          .solve(Mat::Identity(d, d))
                          .transpose() *
                      lam_chol.triangularView<Eigen::Lower>().solve(Mat::Identity(d, d));
  const Mat f = wishart_factor(nu, chol_lower(lam_inv, "inverse_wishart inner"), rng);
  const Mat w = f * f.transpose();
  Mat sigma = w.llt().solve(Mat::Identity(d, d));
  // Symmetrize against roundoff drift.
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return sigma;
}

}  // namespace pahmm
