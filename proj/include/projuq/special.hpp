#pragma once

#include <cmath>
#include <limits>

#include "projuq/errors.hpp"

namespace projuq {

namespace detail {

/// Regularized lower incomplete gamma P(a, x), series branch (x < a + 1).
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// Regularized upper incomplete gamma Q(a, x), continued fraction (x >= a + 1).
inline double gamma_q_cf(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / 1e-30;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// Continued fraction for the regularized incomplete beta function.
inline double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
inline double gamma_p(double a, double x) {
  if (a <= 0.0) throw InvalidArgumentError("gamma_p: a must be > 0");
  if (x < 0.0) throw InvalidArgumentError("gamma_p: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

/// Regularized incomplete beta I_x(a, b).
inline double beta_inc(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw InvalidArgumentError("beta_inc: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

/// Inverse-gamma density IG(x | alpha, beta); zero outside (0, inf).
inline double ig_pdf(double x, double alpha, double beta) {
  if (alpha <= 0.0 || beta <= 0.0) throw InvalidArgumentError("ig_pdf: alpha, beta must be > 0");
  if (x <= 0.0) return 0.0;
  return std::exp(alpha * std::log(beta) - std::lgamma(alpha) -
                  (alpha + 1.0) * std::log(x) - beta / x);
}

/// Inverse-gamma distribution function P(S <= x).
inline double ig_cdf(double x, double alpha, double beta) {
  if (x <= 0.0) return 0.0;
  return gamma_q(alpha, beta / x);
}

/// Chi-squared density with k degrees of freedom.
inline double chi2_pdf(double x, double k) {
  if (k <= 0.0) throw InvalidArgumentError("chi2_pdf: dof must be > 0");
  if (x < 0.0) return 0.0;
  if (x == 0.0) return k < 2.0 ? std::numeric_limits<double>::infinity()
                               : (k == 2.0 ? 0.5 : 0.0);
  const double h = 0.5 * k;
  return std::exp((h - 1.0) * std::log(x) - 0.5 * x - h * std::log(2.0) - std::lgamma(h));
}

inline double chi2_cdf(double x, double k) {
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * k, 0.5 * x);
}

/// F density with d1 numerator and d2 denominator degrees of freedom.
inline double f_pdf(double x, double d1, double d2) {
  if (d1 <= 0.0 || d2 <= 0.0) throw InvalidArgumentError("f_pdf: dof must be > 0");
  if (x < 0.0) return 0.0;
  if (x == 0.0) return d1 < 2.0 ? std::numeric_limits<double>::infinity()
                                : (d1 == 2.0 ? 1.0 : 0.0);
  const double a = 0.5 * d1, b = 0.5 * d2;
  const double ln = a * std::log(d1 / d2) + (a - 1.0) * std::log(x) -
                    (a + b) * std::log(1.0 + d1 * x / d2) + std::lgamma(a + b) -
                    std::lgamma(a) - std::lgamma(b);
  return std::exp(ln);
}

inline double f_cdf(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  return beta_inc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2));
}

/// Standard normal distribution function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace projuq
