#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "projuq/cg.hpp"
#include "projuq/covariance.hpp"
#include "projuq/distributions.hpp"
#include "projuq/errors.hpp"
#include "projuq/matrix.hpp"
#include "projuq/projection.hpp"
#include "projuq/rng.hpp"

namespace projuq {

enum class StatisticKind { Z, S };

inline const char* to_string(StatisticKind s) { return s == StatisticKind::Z ? "Z" : "S"; }

/// Outcome of a scale calibration: the inverse-gamma posterior plus the
/// bookkeeping needed to interpret it.
struct CalibrationResult {
  ScalePosterior prior;
  ScalePosterior posterior;
  StatisticKind statistic = StatisticKind::Z;
  std::size_t observations = 0;  // k; 0 for the residual-based update

  /// E[s] = beta~ / (alpha~ - 1), defined when alpha~ > 1.
  double point_scale() const { return posterior.mean(); }
};

/// Residual-based update: the projection coefficients delta =
/// (W^T A V)^{-1} W^T (b - A x0) shift the scale posterior to
/// alpha + m/2, beta + delta^T delta / 2. No extra solves are needed.
inline CalibrationResult calibrate_cheap(const MatrixHandle& a, const Vec& b, const Vec& x0,
                                         const ProjectionPair& pair,
                                         const ScalePosterior& prior) {
  Vec r = sub(b, a.apply(x0));
  Vec rhs = pair.constraint_basis().apply_transpose(r);
  Vec delta = pair.core_solve(rhs);
  CalibrationResult out;
  out.prior = prior;
  out.statistic = StatisticKind::Z;
  out.observations = 0;
  out.posterior = ScalePosterior(prior.alpha + 0.5 * static_cast<double>(pair.size()),
                                 prior.beta + 0.5 * dot(delta, delta));
  return out;
}

/// How the error projector is realized inside the observation loop.
enum class ErrorProjectionMode {
  factored,   // apply I - V (W^T A V)^{-1} W^T A built from the observation's pair
  cg_trace,   // error of m plain CG sweeps; tracks CG rounding at large m
  automatic,  // factored for n <= 1000, cg_trace above
};

using ProjBuilder =
    std::function<ProjectionPair(const MatrixHandle&, const Vec&, std::size_t)>;

inline ProjBuilder krylov_proj_builder(KrylovVariant variant,
                                       const KrylovOptions& options = {}) {
  return [variant, options](const MatrixHandle& a, const Vec& b, std::size_t m) {
    return krylov_pair(a, b, m, variant, options);
  };
}

/// Observation-based calibration: k times, draw a synthetic exact solution,
/// run the projection method on b = A x*, project out the solved component
/// and accumulate the squared error (Z) or its A-weighted version (S).
/// Posterior: alpha + k (n - m) / 2, beta + sum delta / 2.
inline CalibrationResult calibrate_by_observation(
    const MatrixHandle& a, const ProjBuilder& proj_builder,
    const std::function<Vec(Rng&)>& prior_sampler, std::size_t m, std::size_t k,
    const ScalePosterior& prior, StatisticKind statistic, Rng& rng,
    ErrorProjectionMode mode = ErrorProjectionMode::automatic) {
  const std::size_t n = a.rows();
  if (k < 1) throw InvalidArgumentError("calibrate_by_observation: k must be >= 1");
  if (m > n) throw InvalidArgumentError("calibrate_by_observation: m exceeds dimension");
  if (mode == ErrorProjectionMode::automatic)
    mode = n <= 1000 ? ErrorProjectionMode::factored : ErrorProjectionMode::cg_trace;

  double beta_acc = prior.beta;
  for (std::size_t obs = 1; obs <= k; ++obs) {
    Vec xstar = prior_sampler(rng);
    if (xstar.size() != n)
      throw InvalidArgumentError("calibrate_by_observation: sampler dimension mismatch");
    Vec b = a.apply(xstar);
    Vec e;
    if (mode == ErrorProjectionMode::factored) {
      try {
        ProjectionPair pair = proj_builder(a, b, m);
        FactoredProjector p1 = make_oblique_projector(a, pair);
        e = p1.apply(xstar);
      } catch (const BreakdownError& err) {
        throw BreakdownError(err.index(), "calibrate_by_observation: observation " +
                                              std::to_string(obs) + ": " + err.what());
      }
    } else {
      CgKeep keep;
      keep.iterate_stride = 0;
      keep.residual_vectors = false;
      keep.directions_hi = 0;
      CgTrace trace = cg(a, b, Vec(n, 0.0), m, keep);
      e = sub(xstar, trace.solution());
    }
    const double delta =
        statistic == StatisticKind::Z ? dot(e, e) : dot(e, a.apply(e));
    beta_acc += 0.5 * delta;
  }
  CalibrationResult out;
  out.prior = prior;
  out.statistic = statistic;
  out.observations = k;
  out.posterior = ScalePosterior(
      prior.alpha + 0.5 * static_cast<double>(k) * static_cast<double>(n - m), beta_acc);
  return out;
}

/// Predictive law after marginalizing the scale: Student with dof 2 alpha~,
/// mean x~, scale (beta~ / alpha~) Psi.
inline DegenerateStudent predictive_student(Vec xtilde, const CovarianceFactor& psi,
                                            const ScalePosterior& post) {
  if (post.alpha <= 0.0 || post.beta <= 0.0)
    throw InvalidArgumentError("predictive_student: posterior must be proper");
  return DegenerateStudent(std::move(xtilde), psi.scaled(post.beta / post.alpha),
                           2.0 * post.alpha);
}

/// Draws of E[s] * chi^2_{n-m}, the marginal law of the A-weighted error
/// statistic under the calibrated scale.
inline Vec s_statistic_samples(const CalibrationResult& result, std::size_t n_minus_m,
                               std::size_t count, Rng& rng) {
  const double scale = result.point_scale();  // throws when alpha~ <= 1
  Vec out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = scale * rng.chi_squared(static_cast<double>(n_minus_m));
  return out;
}

/// Rank-d posterior covariance built from the d conjugate gradient directions
/// after checkpoint m: sum of g_i vtilde_i vtilde_i^T with g_i the gains.
/// Directions are re-A-orthonormalized because finite precision erodes the
/// conjugacy the construction relies on.
struct ReidCovariance {
  Mat directions;  // n x d, A-orthonormal
  Vec gains;       // length d, positive

  std::size_t dim() const { return directions.rows(); }
  std::size_t rank() const { return directions.cols(); }

  Mat densify() const {
    Mat sigma(dim(), dim());
    for (std::size_t j = 0; j < rank(); ++j) {
      auto c = directions.col(j);
      for (std::size_t q = 0; q < dim(); ++q)
        for (std::size_t p = 0; p < dim(); ++p) sigma(p, q) += gains[j] * c[p] * c[q];
    }
    return sigma;
  }
};

inline ReidCovariance reid_covariance(const MatrixHandle& a, const CgTrace& trace,
                                      std::size_t m, std::size_t d) {
  if (trace.iterations() < m + d)
    throw InvalidArgumentError("reid_covariance: trace has " +
                               std::to_string(trace.iterations()) +
                               " iterations, need m + d = " + std::to_string(m + d));
  const std::size_t n = trace.dim();
  ReidCovariance rc;
  rc.directions = Mat(n, d);
  rc.gains.resize(d);
  std::vector<Vec> a_dirs;  // cached A u_j of accepted directions
  a_dirs.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t idx = m + 1 + j;
    Vec u = trace.direction(idx);
    const double eta = trace.eta(idx);
    if (eta <= 0.0) throw NotSpdError("reid_covariance: nonpositive curvature in trace");
    scale(1.0 / std::sqrt(eta), u);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double h = dot(a_dirs[i], u);
        axpy(-h, rc.directions.col(i), u);
      }
    }
    Vec au = a.apply(u);
    const double uau = dot(u, au);
    if (uau <= 0.0) throw NotSpdError("reid_covariance: direction collapsed under A-norm");
    const double s = 1.0 / std::sqrt(uau);
    scale(s, u);
    scale(s, au);
    std::copy(u.begin(), u.end(), rc.directions.col(j).begin());
    a_dirs.push_back(std::move(au));
    rc.gains[j] = trace.gain(idx);
    if (!(rc.gains[j] > 0.0))
      throw InvalidArgumentError("reid_covariance: nonpositive gain in trace");
  }
  return rc;
}

/// Zero-mean draw from the rank-d covariance; lies in the span of the stored
/// directions by construction.
inline Vec reid_sample(const ReidCovariance& rc, Rng& rng) {
  Vec x(rc.dim(), 0.0);
  for (std::size_t j = 0; j < rc.rank(); ++j)
    axpy(std::sqrt(rc.gains[j]) * rng.gaussian(), rc.directions.col(j), x);
  return x;
}

/// Telescoping lower bound sum_{m+1}^{m+d} gamma_i ||r_{i-1}||^2 for the
/// squared A-norm error at checkpoint m.
inline double reid_underestimate(const CgTrace& trace, std::size_t m, std::size_t d) {
  if (trace.iterations() < m + d)
    throw InvalidArgumentError("reid_underestimate: insufficient trace length");
  double s = 0.0;
  for (std::size_t i = m + 1; i <= m + d; ++i) s += trace.gain(i);
  return s;
}

/// Operator norm ||B||_{A, A^{-1}} of B = sum d_j u_j u_j^T with A-orthonormal
/// u_j: the largest coefficient. Empty expansions have norm zero.
inline double op_norm_a_ainv(std::span<const double> coefficients) {
  double best = 0.0;
  for (double d : coefficients) {
    if (d < 0.0) throw InvalidArgumentError("op_norm_a_ainv: coefficients must be >= 0");
    best = std::max(best, d);
  }
  return best;
}

/// Error of the best rank-r truncation in the same norm: the (r+1)-th largest
/// coefficient, zero once r covers the whole expansion.
inline double op_norm_truncation_error(std::span<const double> coefficients, std::size_t r) {
  if (r >= coefficients.size()) return 0.0;
  Vec sorted(coefficients.begin(), coefficients.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  return sorted[r];
}

}  // namespace projuq
