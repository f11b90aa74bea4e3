#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "projuq/covariance.hpp"
#include "projuq/errors.hpp"
#include "projuq/rng.hpp"
#include "projuq/special.hpp"
#include "projuq/vec.hpp"

namespace projuq {

/// Gaussian with a possibly rank-deficient covariance held as a factor.
/// Samples always land on mean + range(cov.factor); the density is defined
/// only there and evaluation off the support reports OutOfRangeError.
struct DegenerateGaussian {
  Vec mean;
  CovarianceFactor cov;

  DegenerateGaussian(Vec mean_, CovarianceFactor cov_)
      : mean(std::move(mean_)), cov(std::move(cov_)) {
    if (mean.size() != cov.dim())
      throw DimensionError("DegenerateGaussian: mean/covariance dimension mismatch");
  }
};

inline Vec gaussian_sample(const DegenerateGaussian& g, Rng& rng) {
  Vec delta(g.cov.rank());
  for (double& d : delta) d = rng.gaussian();
  Vec x = g.mean;
  if (!delta.empty()) {
    Vec t = g.cov.apply_factor(delta);
    axpy(1.0, t, x);
  }
  return x;
}

/// Log density of the degenerate Gaussian at x. The support gate mirrors the
/// indicator in the density: off-support points are rejected rather than
/// given -inf.
inline double gaussian_logpdf(const DegenerateGaussian& g, std::span<const double> x) {
  if (x.size() != g.mean.size()) throw DimensionError("gaussian_logpdf: dimension mismatch");
  Vec d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - g.mean[i];
  CovarianceQuad quad(g.cov);
  const double leak = quad.range_residual(d);
  if (leak > kSupportTolerance * std::max(norm2(d), 1e-300))
    throw OutOfRangeError("gaussian_logpdf: point off the support");
  const double q = quad.quadform_unchecked(d);
  const double k = static_cast<double>(quad.rank());
  return -0.5 * q - 0.5 * (k * std::log(2.0 * std::numbers::pi) + quad.log_det_nonzero());
}

/// Student distribution with degenerate scale matrix, realized as a Gaussian
/// whose scale is mixed against an inverse gamma.
struct DegenerateStudent {
  Vec mean;
  CovarianceFactor scale;
  double dof;

  DegenerateStudent(Vec mean_, CovarianceFactor scale_, double dof_)
      : mean(std::move(mean_)), scale(std::move(scale_)), dof(dof_) {
    if (mean.size() != scale.dim())
      throw DimensionError("DegenerateStudent: mean/scale dimension mismatch");
    if (dof <= 0.0) throw InvalidArgumentError("DegenerateStudent: dof must be > 0");
  }
};

/// Draw s ~ IG(dof/2, dof/2) and return mean + sqrt(s) * factor * delta; the
/// marginal law is the multivariate Student with the stored dof.
inline Vec student_sample(const DegenerateStudent& t, Rng& rng) {
  const double s = rng.inverse_gamma(0.5 * t.dof, 0.5 * t.dof);
  Vec delta(t.scale.rank());
  for (double& d : delta) d = rng.gaussian();
  Vec x = t.mean;
  if (!delta.empty()) {
    Vec v = t.scale.apply_factor(delta);
    axpy(std::sqrt(s), v, x);
  }
  return x;
}

inline double student_logpdf(const DegenerateStudent& t, std::span<const double> x) {
  if (x.size() != t.mean.size()) throw DimensionError("student_logpdf: dimension mismatch");
  Vec d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - t.mean[i];
  CovarianceQuad quad(t.scale);
  const double leak = quad.range_residual(d);
  if (leak > kSupportTolerance * std::max(norm2(d), 1e-300))
    throw OutOfRangeError("student_logpdf: point off the support");
  const double q = quad.quadform_unchecked(d);
  const double k = static_cast<double>(quad.rank());
  const double nu = t.dof;
  const double log_c = std::lgamma(0.5 * (nu + k)) - std::lgamma(0.5 * nu) -
                       0.5 * (k * std::log(std::numbers::pi * nu) + quad.log_det_nonzero());
  return log_c - 0.5 * (nu + k) * std::log1p(q / nu);
}

/// Inverse-gamma law over the covariance scale; (0, 0) is the improper
/// noninformative choice and is explicitly allowed.
struct ScalePosterior {
  double alpha = 0.0;
  double beta = 0.0;

  ScalePosterior() = default;
  ScalePosterior(double a, double b) : alpha(a), beta(b) {
    if (a < 0.0 || b < 0.0)
      throw InvalidArgumentError("ScalePosterior: parameters must be >= 0");
  }

  bool proper() const { return alpha > 0.0 && beta > 0.0; }

  /// E[s] = beta / (alpha - 1); defined for alpha > 1 only.
  double mean() const {
    if (alpha <= 1.0)
      throw InvalidArgumentError("ScalePosterior::mean: undefined for alpha <= 1");
    return beta / (alpha - 1.0);
  }
};

/// Density estimate on a fixed grid. Mass is tracked with the same central
/// Riemann convention used for the L1 discrepancy.
struct DensityEstimate {
  Vec grid;    // sorted, uniform spacing
  Vec values;  // nonnegative

  double cell_width() const {
    if (grid.size() < 2) return 0.0;
    return (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  }

  double mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_width();
  }
};

/// Uniform grid of cell centers covering [lo, hi].
inline Vec center_grid(double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) throw InvalidArgumentError("center_grid: bad range");
  Vec g(points);
  const double w = (hi - lo) / static_cast<double>(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo + (static_cast<double>(i) + 0.5) * w;
  return g;
}

/// Gaussian-kernel density estimate with the Silverman bandwidth
/// h = 1.06 sigma N^{-1/5}.
inline DensityEstimate kde(const std::vector<double>& samples, Vec grid) {
  if (samples.size() < 2) throw InvalidArgumentError("kde: need at least 2 samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= (n - 1.0);
  if (var <= 0.0) throw DegenerateSampleError("kde: samples have no spread");
  const double h = 1.06 * std::sqrt(var) * std::pow(n, -0.2);
  DensityEstimate est;
  est.values.assign(grid.size(), 0.0);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (grid[i] - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    est.values[i] = acc * norm;
  }
  est.grid = std::move(grid);
  return est;
}

/// Evaluate a density function on a grid.
inline DensityEstimate density_on_grid(const std::function<double(double)>& pdf, Vec grid) {
  DensityEstimate est;
  est.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) est.values[i] = pdf(grid[i]);
  est.grid = std::move(grid);
  return est;
}

/// Central Riemann approximation of the L1 distance between two densities on
/// one shared grid. The value lives in [0, ~2].
inline double l1_distance(const DensityEstimate& p, const DensityEstimate& q) {
  if (p.grid.size() != q.grid.size())
    throw InvalidArgumentError("l1_distance: grid size mismatch");
  for (std::size_t i = 0; i < p.grid.size(); ++i)
    if (p.grid[i] != q.grid[i]) throw InvalidArgumentError("l1_distance: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i)
    s += std::abs(p.values[i] - q.values[i]);
  return s * p.cell_width();
}

/// Kolmogorov–Smirnov statistic of samples against a reference distribution
/// function.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidArgumentError("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double hi = (static_cast<double>(i) + 1.0) / n - f;
    const double lo = f - static_cast<double>(i) / n;
    worst = std::max({worst, std::abs(hi), std::abs(lo)});
  }
  return worst;
}

/// Empirical quantile (linear interpolation between order statistics).
inline double quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw InvalidArgumentError("quantile: no samples");
  if (q < 0.0 || q > 1.0) throw InvalidArgumentError("quantile: q outside [0, 1]");
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= samples.size()) return samples.back();
  const double frac = pos - static_cast<double>(i);
  return samples[i] * (1.0 - frac) + samples[i + 1] * frac;
}

}  // namespace projuq
