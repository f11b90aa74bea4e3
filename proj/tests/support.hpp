// Shared helpers for the test suites: dense oracles and controlled random
// inputs. Everything here is deliberately independent of the library's
// production code paths (SVD-based pseudo-inverses, explicit dense algebra)
// so the two sides can check each other.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "projuq/projuq.hpp"

namespace testsupport {

using projuq::Mat;
using projuq::MatrixHandle;
using projuq::Rng;
using projuq::Vec;

inline Mat random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Mat m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  return m;
}

inline Vec random_vector(std::size_t n, Rng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

/// SPD matrix with eigenvalues log-spaced in [1, cond] and Haar eigenvectors.
inline MatrixHandle random_spd_with_condition(std::size_t n, double cond, Rng& rng) {
  Mat u = projuq::haar_orthogonal(n, rng);
  Mat a(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = n == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n - 1);
    const double lambda = std::pow(cond, t);
    for (std::size_t i = 0; i < n; ++i) a(i, j) = u(i, j) * lambda;
  }
  Mat full = a.multiply(u.transposed());
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) {
      const double s = 0.5 * (full(i, j) + full(j, i));
      full(i, j) = s;
      full(j, i) = s;
    }
  return MatrixHandle(std::move(full), true);
}

/// Dense Moore-Penrose pseudo-inverse through the SVD; the oracle route for
/// the factored quadratic forms.
inline Mat pseudo_inverse(const Mat& a, double rel_tol = 1e-12) {
  projuq::SvdResult svd = projuq::jacobi_svd(a);
  const double smax = svd.sigma.empty() ? 0.0 : svd.sigma.front();
  Mat out(a.cols(), a.rows());
  for (std::size_t k = 0; k < svd.sigma.size(); ++k) {
    if (svd.sigma[k] <= rel_tol * smax) break;
    const double inv = 1.0 / svd.sigma[k];
    for (std::size_t j = 0; j < a.rows(); ++j)
      for (std::size_t i = 0; i < a.cols(); ++i)
        out(i, j) += inv * svd.v(i, k) * svd.u(j, k);
  }
  return out;
}

/// v^T Sigma^dagger v evaluated with the dense pseudo-inverse.
inline double dense_pseudo_quadform(const Mat& sigma, const Vec& v) {
  Mat pinv = pseudo_inverse(sigma);
  Vec w = pinv.apply(v);
  return projuq::dot(v, w);
}

/// Symmetric square root of an SPD matrix via the eigendecomposition.
inline Mat spd_sqrt(const Mat& a) {
  projuq::EighResult eig = projuq::jacobi_eigh(a);
  const std::size_t n = a.rows();
  Mat scaled(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = std::sqrt(std::max(0.0, eig.eigenvalues[j]));
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) = eig.eigenvectors(i, j) * s;
  }
  return scaled.multiply(eig.eigenvectors.transposed());
}

inline double rel_error(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double frobenius_diff(const Mat& a, const Mat& b) { return (a - b).frobenius_norm(); }

/// Log-grid quadrature posterior for an inverse-gamma prior against a
/// likelihood proportional to s^{-df/2} exp(-q / (2 s)). Returns the
/// moment-matched (alpha, beta) of the normalized posterior.
struct QuadraturePosterior {
  double alpha;
  double beta;
};

inline QuadraturePosterior ig_quadrature_posterior(double prior_alpha, double prior_beta,
                                                   double df, double q,
                                                   std::size_t points = 400000) {
  // centre the log-grid on the maximizer of the integrand kernel
  // s^{-(a + df/2 + 1)} exp(-(b + q/2)/s); 18 log-units of margin each way
  const double mode = (prior_beta + 0.5 * q) / (prior_alpha + 0.5 * df + 1.0);
  const double lo = std::log(mode) - 18.0;
  const double hi = std::log(mode) + 18.0;
  const double step = (hi - lo) / static_cast<double>(points - 1);
  auto log_unnorm = [&](double s) {
    double lp = -(prior_alpha + 1.0) * std::log(s) - prior_beta / s;  // prior kernel
    lp += -0.5 * df * std::log(s) - 0.5 * q / s;                      // likelihood
    return lp;
  };
  // trapezoid in t = log s with weight s dt
  double z = 0.0, m1 = 0.0, m2 = 0.0;  // mass, E[1/s], E[1/s^2]
  for (std::size_t i = 0; i < points; ++i) {
    const double t = lo + step * static_cast<double>(i);
    const double s = std::exp(t);
    double w = std::exp(log_unnorm(s) + t);  // includes Jacobian s
    if (i == 0 || i + 1 == points) w *= 0.5;
    z += w;
    m1 += w / s;
    m2 += w / (s * s);
  }
  m1 /= z;
  m2 /= z;
  const double var = m2 - m1 * m1;
  QuadraturePosterior out;
  out.alpha = m1 * m1 / var;
  out.beta = out.alpha / m1;
  return out;
}

}  // namespace testsupport
