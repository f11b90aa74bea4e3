#pragma once

#include <cmath>
#include <cstdint>

#include "projuq/errors.hpp"

namespace projuq {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic random stream (xoshiro-free, self-contained transforms so
/// that sequences are reproducible across standard libraries). One instance
/// per thread; derive independent streams with child().
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(detail::splitmix64(seed)) {
    if (state_ == 0) state_ = 0x2545f4914f6cdd1dULL;
  }

  /// Independent stream derived from a master seed and a stream counter.
  static Rng child(std::uint64_t master, std::uint64_t stream) {
    return Rng(detail::splitmix64(master) ^
               detail::splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
  }

  std::uint64_t raw() {
    // xorshift64*
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1], safe for log().
  double uniform_pos() {
    return (static_cast<double>(raw() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  /// Exponential with the given scale (mean).
  double exponential(double scale) {
    if (scale <= 0.0) throw InvalidArgumentError("exponential: scale must be > 0");
    return -scale * std::log(uniform_pos());
  }

  /// Gamma(shape, scale 1) via Marsaglia–Tsang squeeze.
  double gamma(double shape) {
    if (shape <= 0.0) throw InvalidArgumentError("gamma: shape must be > 0");
    if (shape < 1.0) {
      // boost: G(a) = G(a+1) * U^{1/a}
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_pos(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = gaussian();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Chi-squared with dof degrees of freedom.
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  /// Inverse gamma with shape alpha and rate beta.
  double inverse_gamma(double alpha, double beta) {
    if (beta <= 0.0) throw InvalidArgumentError("inverse_gamma: beta must be > 0");
    return beta / gamma(alpha);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace projuq
