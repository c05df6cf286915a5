#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace pahmm {

inline constexpr double kPi = 3.14159265358979323846;

// All continuous draws are built from the raw mt19937_64 word stream rather
// than std::<distribution> wrappers, whose algorithms vary between standard
// library implementations. Fixing them here makes a (seed, config) pair map
// to one bit-exact chain everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on the open interval (0, 1); never returns 0 or 1, so logs and
  // inversions are safe.
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * kPi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential() { return -std::log(uniform()); }

  // Marsaglia-Tsang, unit scale. shape > 0.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  void dirichlet(const double* alpha, int k, double* out) {
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      out[i] = gamma(alpha[i]);
      sum += out[i];
    }
    for (int i = 0; i < k; ++i) out[i] /= sum;
  }

  // Index draw from unnormalized non-negative weights.
  int categorical(const double* w, int k) {
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += w[i];
    if (!(total > 0.0) || !std::isfinite(total))
      throw std::runtime_error("categorical: degenerate weight vector");
    double u = uniform() * total;
    for (int i = 0; i < k - 1; ++i) {
      u -= w[i];
      if (u <= 0.0) return i;
    }
    return k - 1;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Sub-run seeds are derived, not reused: hash(master, component, index).
// FNV-1a over the inputs with a splitmix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix_u64 = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix_u64(master);
  for (char ch : component) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  mix_u64(index);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ull;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebull;
  h ^= h >> 31;
  return h;
}

}  // namespace pahmm
