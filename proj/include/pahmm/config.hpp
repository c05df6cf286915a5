#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pahmm/rng.hpp"

namespace pahmm {

// Fit configuration. Iteration layout follows the three-phase sampler:
// init_iters exploratory sweeps on the observed data, then burn_iters +
// iters sweeps on the augmented data with the last `iters` saved.
struct ModelConfig {
  int K = 3;
  int baseline_hour = -1;  // -1: pick the hour with the most observed state changes
  double zeta0 = 0.0;      // prior mean, broadcast over all coefficients
  double sigma0_sq = 0.1;  // prior variance of each coefficient

  // NIW hyperparameters; negative/empty values are resolved from the
  // observed rows (column means, column variances, nu0 = d + 2).
  double niw_kappa0 = 0.01;
  double niw_nu0 = -1.0;
  std::vector<double> niw_mu0;          // empty: observed column means
  std::vector<double> niw_lambda0_diag; // empty: observed column variances

  int aug_strength = 1;  // m pseudo-day replicates per state; 0 disables
  int day_len = 96;      // quarter-hour slots per pseudo-day
  int init_iters = 2000;
  int burn_iters = 15000;
  int iters = 5000;
  std::vector<double> pi;  // initial-state distribution; empty = uniform
  double dirichlet_alpha = 1.0;  // homogeneous-baseline prior concentration
  bool kappa_scaled_mean = true; // false: mu_j | Sigma_j ~ N(mu_n, Sigma_j)
  std::uint64_t seed = 1;

  void validate() const {
    if (K < 2) throw std::invalid_argument("config: K must be >= 2");
    if (sigma0_sq <= 0.0) throw std::invalid_argument("config: sigma0_sq must be > 0");
    if (init_iters < 0 || burn_iters < 0 || iters < 0)
      throw std::invalid_argument("config: iteration counts must be >= 0");
    if (aug_strength < 0)
      throw std::invalid_argument("config: aug_strength must be >= 0");
    if (day_len <= 0) throw std::invalid_argument("config: day_len must be > 0");
    if (baseline_hour < -1 || baseline_hour > 23)
      throw std::invalid_argument("config: baseline_hour must be in [0, 23] or -1");
    if (!pi.empty()) {
      if (static_cast<int>(pi.size()) != K)
        throw std::invalid_argument("config: pi must have K entries");
      double s = 0.0;
      for (double v : pi) {
        if (v < 0.0) throw std::invalid_argument("config: pi entries must be >= 0");
        s += v;
      }
      if (s <= 0.0) throw std::invalid_argument("config: pi must not be all zero");
    }
    if (dirichlet_alpha <= 0.0)
      throw std::invalid_argument("config: dirichlet_alpha must be > 0");
  }

  std::vector<double> resolved_pi() const {
    if (pi.empty()) return std::vector<double>(K, 1.0 / K);
    std::vector<double> out = pi;
    double s = 0.0;
    for (double v : out) s += v;
    for (double& v : out) v /= s;
    return out;
  }

  std::string canonical_string() const {
    std::ostringstream os;
    os << "K=" << K << ";baseline_hour=" << baseline_hour << ";zeta0=" << zeta0
       << ";sigma0_sq=" << sigma0_sq << ";niw_kappa0=" << niw_kappa0
       << ";niw_nu0=" << niw_nu0 << ";aug_strength=" << aug_strength
       << ";day_len=" << day_len << ";init_iters=" << init_iters
       << ";burn_iters=" << burn_iters << ";iters=" << iters
       << ";dirichlet_alpha=" << dirichlet_alpha
       << ";kappa_scaled_mean=" << kappa_scaled_mean << ";seed=" << seed;
    os << ";pi=";
    for (double v : pi) os << v << ",";
    os << ";niw_mu0=";
    for (double v : niw_mu0) os << v << ",";
    os << ";niw_lambda0_diag=";
    for (double v : niw_lambda0_diag) os << v << ",";
    return os.str();
  }

  std::string config_hash() const {
    const std::string c = canonical_string();
    std::uint64_t h = 1469598103934665603ull;
    for (char ch : c) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

}  // namespace pahmm
