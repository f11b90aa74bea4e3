#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "projuq/basis.hpp"
#include "projuq/covariance.hpp"
#include "projuq/decomp.hpp"
#include "projuq/distributions.hpp"
#include "projuq/errors.hpp"
#include "projuq/matrix.hpp"
#include "projuq/rng.hpp"

namespace projuq {

/// Condition-estimate ceiling for the m x m projection core.
inline constexpr double kCoreConditionLimit = 1e14;

/// Search/constraint bases (V, W) together with the factored core W^T A V.
/// Immutable after construction and safe to share between threads.
class ProjectionPair {
 public:
  ProjectionPair(const MatrixHandle& a, Mat v, Mat w)
      : v_(std::move(v)), w_(std::move(w)) {
    if (v_.rows() != a.rows() || w_.rows() != a.rows() || v_.cols() != w_.cols())
      throw DimensionError("ProjectionPair: basis shapes incompatible with A");
    if (v_.cols() > v_.rows())
      throw DimensionError("ProjectionPair: more basis vectors than dimensions");
    av_ = a.apply_mat(v_);
    Mat core = w_.transpose_multiply(av_);
    try {
      core_.emplace(std::move(core));
    } catch (const SingularMatrixError&) {
      throw IllPosedProjectionError("ProjectionPair: W^T A V is singular");
    }
    if (size() > 0 && core_->condition_estimate() > kCoreConditionLimit)
      throw IllPosedProjectionError("ProjectionPair: W^T A V condition estimate " +
                                    std::to_string(core_->condition_estimate()));
  }

  std::size_t dim() const { return v_.rows(); }
  /// Number of search directions m.
  std::size_t size() const { return v_.cols(); }

  const Mat& search_basis() const { return v_; }
  const Mat& constraint_basis() const { return w_; }
  /// Cached product A V.
  const Mat& a_times_search() const { return av_; }

  /// (W^T A V)^{-1} y
  Vec core_solve(std::span<const double> y) const { return core_->solve(y); }

 private:
  Mat v_;
  Mat w_;
  Mat av_;
  std::optional<LuFactor> core_;
};

/// x~ = x0 + V (W^T A V)^{-1} W^T (b - A x0). The residual b - A x~ is
/// orthogonal to range(W) up to rounding.
inline Vec petrov_galerkin_solve(const MatrixHandle& a, const Vec& b, const Vec& x0,
                                 const ProjectionPair& pair) {
  if (b.size() != a.rows() || x0.size() != a.cols())
    throw DimensionError("petrov_galerkin_solve: dimension mismatch");
  Vec r = sub(b, a.apply(x0));
  Vec rhs = pair.constraint_basis().apply_transpose(r);
  Vec y = pair.core_solve(rhs);
  Vec x = x0;
  if (!y.empty()) axpy(1.0, pair.search_basis().apply(y), x);
  return x;
}

/// Projector held in factored form; never densified in production paths.
/// The oblique kind applies x - V (W^T A V)^{-1} (A^T W)^T x and the
/// orthogonal kind x - Q Q^T x for an orthonormal Q.
class FactoredProjector {
 public:
  enum class Kind { oblique, orthogonal };

  static FactoredProjector oblique(Mat v, Mat atw, LuFactor core) {
    FactoredProjector p;
    p.kind_ = Kind::oblique;
    p.n_ = v.rows();
    p.basis_ = std::move(v);
    p.atw_ = std::move(atw);
    p.core_ = std::move(core);
    return p;
  }

  static FactoredProjector orthogonal(OrthonormalBasis q) {
    FactoredProjector p;
    p.kind_ = Kind::orthogonal;
    p.n_ = q.dim();
    p.basis_ = std::move(q.columns);
    return p;
  }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return n_; }
  /// Dimension of the annihilated subspace (m); the projector has rank n - m.
  std::size_t corank() const { return basis_.cols(); }

  /// P x
  Vec apply(std::span<const double> x) const {
    Vec c = complement_coefficients(x);
    Vec out(x.begin(), x.end());
    if (!c.empty()) axpy(-1.0, basis_.apply(c), out);
    return out;
  }

  /// (I - P) x
  Vec apply_complement(std::span<const double> x) const {
    Vec c = complement_coefficients(x);
    if (c.empty()) return Vec(x.size(), 0.0);
    return basis_.apply(c);
  }

  /// Dense form for small oracle checks only.
  Mat densify() const {
    if (n_ > 64)
      throw InvalidArgumentError("FactoredProjector::densify: reserved for n <= 64");
    Mat d(n_, n_);
    for (std::size_t j = 0; j < n_; ++j) {
      Vec e(n_, 0.0);
      e[j] = 1.0;
      Vec pj = apply(e);
      std::copy(pj.begin(), pj.end(), d.col(j).begin());
    }
    return d;
  }

 private:
  // coefficients c with (I - P) x = basis * c
  Vec complement_coefficients(std::span<const double> x) const {
    if (x.size() != n_) throw DimensionError("FactoredProjector: dimension mismatch");
    if (basis_.cols() == 0) return Vec();
    if (kind_ == Kind::orthogonal) return basis_.apply_transpose(x);
    Vec t = atw_.apply_transpose(x);  // W^T A x
    return core_->solve(t);
  }

  Kind kind_ = Kind::orthogonal;
  std::size_t n_ = 0;
  Mat basis_;                      // V (oblique) or orthonormal Q (orthogonal)
  Mat atw_;                        // A^T W, oblique kind only
  std::optional<LuFactor> core_;   // LU of W^T A V, oblique kind only
};

/// Oblique projector onto Null(W^T A) along range(V), from the pair's own
/// factorization. Storage is 2 n m + m^2 numbers.
inline FactoredProjector make_oblique_projector(const MatrixHandle& a,
                                                const ProjectionPair& pair) {
  Mat atw = a.apply_transpose_mat(pair.constraint_basis());
  Mat core = pair.constraint_basis().transpose_multiply(pair.a_times_search());
  return FactoredProjector::oblique(pair.search_basis(), std::move(atw),
                                    LuFactor(std::move(core)));
}

/// Orthogonal projector onto Null(W^T A), built from an orthonormal basis of
/// range(A^T W); the normal-equations inverse collapses to I after the basis
/// is orthonormalized.
inline FactoredProjector make_orthogonal_projector(const MatrixHandle& a, const Mat& w) {
  Mat ytilde = a.apply_transpose_mat(w);
  OrthonormalBasis q;
  try {
    q = orthonormalize(ytilde);
  } catch (const RankDeficientError&) {
    throw RankDeficientError("make_orthogonal_projector: A^T W is rank deficient");
  }
  return FactoredProjector::orthogonal(std::move(q));
}

enum class KrylovVariant { cg_like, gmres_like };

struct KrylovOptions {
  /// Keep the raw normalized monomial columns instead of orthonormalizing.
  bool raw_monomial = false;
  /// Optional b-independent seed vector rho for K_m(A, rho).
  std::optional<Vec> seed_vector;
};

/// V spans K_m(A, b) (orthonormalized by an Arnoldi-style recurrence unless
/// raw_monomial); W = V for cg_like, W = A V for gmres_like. Stalls raise
/// BreakdownError carrying the step at which the subspace became invariant.
inline ProjectionPair krylov_pair(const MatrixHandle& a, const Vec& b, std::size_t m,
                                  KrylovVariant variant, const KrylovOptions& options = {}) {
  const std::size_t n = a.rows();
  if (m > n) throw InvalidArgumentError("krylov_pair: m exceeds the dimension");
  if (m == 0) throw InvalidArgumentError("krylov_pair: m must be >= 1");
  const Vec& seed = options.seed_vector ? *options.seed_vector : b;
  if (seed.size() != n) throw DimensionError("krylov_pair: seed length mismatch");
  const double bn = norm2(seed);
  if (bn == 0.0) throw InvalidArgumentError("krylov_pair: zero seed vector");

  Mat v(n, m);
  {
    auto c0 = v.col(0);
    for (std::size_t i = 0; i < n; ++i) c0[i] = seed[i] / bn;
  }
  for (std::size_t j = 1; j < m; ++j) {
    Vec w = a.apply(v.col(j - 1));
    const double before = norm2(w);
    if (!options.raw_monomial) {
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t i = 0; i < j; ++i) axpy(-dot(v.col(i), w), v.col(i), w);
    }
    const double after = norm2(w);
    if (after <= 1e-13 * before || after == 0.0)
      throw BreakdownError(j, "krylov_pair: Krylov subspace is invariant at step " +
                                  std::to_string(j));
    auto cj = v.col(j);
    for (std::size_t i = 0; i < n; ++i) cj[i] = w[i] / after;
  }
  Mat w = (variant == KrylovVariant::cg_like) ? v : a.apply_mat(v);
  return ProjectionPair(a, std::move(v), std::move(w));
}

/// Full-space pair (V = W = I); the projection solve becomes a direct solve.
inline ProjectionPair full_space_pair(const MatrixHandle& a) {
  if (a.rows() > 1024)
    throw InvalidArgumentError("full_space_pair: dense identity basis reserved for n <= 1024");
  Mat eye = Mat::identity(a.rows());
  return ProjectionPair(a, eye, eye);
}

/// General Gaussian conditioning of N(x0, Sigma0) on S^T A x = S^T b.
/// The posterior covariance factor is the prior factor restricted to the
/// nullspace of S^T A Sigma0^{1/2}, which keeps it PSD by construction.
struct GaussianPosterior {
  Vec mean;
  CovarianceFactor cov;
};

inline GaussianPosterior general_posterior(const CovarianceFactor& sigma0,
                                           const MatrixHandle& a, const Mat& s,
                                           const Vec& b, const Vec& x0) {
  const std::size_t n = a.rows();
  if (sigma0.dim() != n || s.rows() != n || b.size() != n || x0.size() != n)
    throw DimensionError("general_posterior: dimension mismatch");
  const Mat& x = sigma0.factor;           // n x k
  Mat at_s = a.apply_transpose_mat(s);    // n x m
  Mat m_mat = at_s.transpose_multiply(x); // m x k = S^T A X
  Mat inner = m_mat.multiply(m_mat.transposed());
  Mat chol;
  try {
    chol = cholesky(inner);
  } catch (const NotSpdError&) {
    throw IllPosedConditioningError("general_posterior: S^T A Sigma0 A^T S is singular");
  }
  {
    double lo = chol(0, 0), hi = chol(0, 0);
    for (std::size_t i = 0; i < chol.rows(); ++i) {
      lo = std::min(lo, chol(i, i));
      hi = std::max(hi, chol(i, i));
    }
    if (lo <= 0.0 || (hi / lo) * (hi / lo) > kCoreConditionLimit)
      throw IllPosedConditioningError("general_posterior: inner matrix numerically singular");
  }
  Vec r = sub(b, a.apply(x0));
  Vec st_r = s.apply_transpose(r);
  Vec u = cholesky_solve(chol, st_r);
  GaussianPosterior post;
  post.mean = x0;
  axpy(1.0, x.apply(m_mat.apply_transpose(u)), post.mean);
  OrthonormalBasis null_m = nullspace_basis(m_mat, kSupportTolerance);
  post.cov = CovarianceFactor{x.multiply(null_m.columns)};
  return post;
}

/// Prior over exact solutions: x* = x0 + V v + tail * y with independent
/// standard normal v, y. The tail lies in Null(W^T A), either as an explicit
/// factor Y G^{1/2} or as an orthogonal projector standing in for Psi.
class StructuredPrior {
 public:
  StructuredPrior(Vec x0, Mat v, CovarianceFactor tail, double tail_scale = 1.0)
      : x0_(std::move(x0)), v_(std::move(v)), tail_(std::move(tail)),
        tail_scale_(check_scale(tail_scale)) {}

  StructuredPrior(Vec x0, Mat v, FactoredProjector tail, double tail_scale = 1.0)
      : x0_(std::move(x0)), v_(std::move(v)), tail_(std::move(tail)),
        tail_scale_(check_scale(tail_scale)) {}

  const Vec& shift() const { return x0_; }
  const Mat& search_basis() const { return v_; }
  double tail_scale() const { return tail_scale_; }
  bool tail_is_projector() const {
    return std::holds_alternative<FactoredProjector>(tail_);
  }
  const CovarianceFactor& tail_factor() const { return std::get<CovarianceFactor>(tail_); }
  const FactoredProjector& tail_projector() const {
    return std::get<FactoredProjector>(tail_);
  }

  /// Draw of the tail component only (zero-mean).
  Vec sample_tail(Rng& rng) const {
    Vec t;
    if (tail_is_projector()) {
      const auto& p = std::get<FactoredProjector>(tail_);
      Vec xi(p.dim());
      for (double& z : xi) z = rng.gaussian();
      t = p.apply(xi);
    } else {
      const auto& f = std::get<CovarianceFactor>(tail_);
      Vec y(f.rank());
      for (double& z : y) z = rng.gaussian();
      t = f.rank() ? f.apply_factor(y) : Vec(f.dim(), 0.0);
    }
    if (tail_scale_ != 1.0) scale(std::sqrt(tail_scale_), t);
    return t;
  }

 private:
  static double check_scale(double s) {
    if (s < 0.0) throw InvalidArgumentError("StructuredPrior: negative tail scale");
    return s;
  }

  Vec x0_;
  Mat v_;
  std::variant<CovarianceFactor, FactoredProjector> tail_;
  double tail_scale_;
};

/// Checked construction: verifies W^T A tail ~ 0 (relative 1e-8) before
/// accepting the prior.
template <class Tail>
StructuredPrior structured_prior(const MatrixHandle& a, const Mat& w, Vec x0, Mat v,
                                 Tail tail, double tail_scale = 1.0) {
  StructuredPrior prior(std::move(x0), std::move(v), std::move(tail), tail_scale);
  Mat at_w = a.apply_transpose_mat(w);  // n x m; W^T A tail = (A^T W)^T tail
  double defect = 0.0, scale_ref = 0.0;
  if (prior.tail_is_projector()) {
    const auto& p = prior.tail_projector();
    for (std::size_t j = 0; j < at_w.cols(); ++j) {
      Vec pj = p.apply(at_w.col(j));
      defect = std::max(defect, norm2(pj));
      scale_ref = std::max(scale_ref, norm2(at_w.col(j)));
    }
  } else {
    const auto& f = prior.tail_factor();
    Mat prod = at_w.transpose_multiply(f.factor);  // m x k
    defect = prod.frobenius_norm();
    scale_ref = at_w.frobenius_norm() * f.factor.frobenius_norm();
  }
  if (defect > 1e-8 * std::max(scale_ref, 1e-300))
    throw InvalidArgumentError("structured_prior: tail is not annihilated by W^T A");
  return prior;
}

/// x* = x0 + V v + tail draw, v standard normal.
inline Vec sample_prior_solution(const StructuredPrior& prior, Rng& rng) {
  Vec x = prior.shift();
  const Mat& v = prior.search_basis();
  if (v.cols() > 0) {
    Vec coeff(v.cols());
    for (double& c : coeff) c = rng.gaussian();
    axpy(1.0, v.apply(coeff), x);
  }
  Vec t = prior.sample_tail(rng);
  axpy(1.0, t, x);
  return x;
}

/// Squared-cosine alignment e^T P e / e^T e of an error with the span of the
/// given orthonormal columns.
inline double alignment_cosine(const Vec& error, const OrthonormalBasis& ysub) {
  if (error.size() != ysub.dim()) throw DimensionError("alignment_cosine: dimension mismatch");
  const double en2 = dot(error, error);
  if (en2 == 0.0) throw InvalidArgumentError("alignment_cosine: zero error vector");
  Vec c = ysub.columns.apply_transpose(error);
  return dot(c, c) / en2;
}

/// Density of the alignment cosine when the leading p of n - m nullspace
/// directions carry standard deviation s and the rest 1: the cosine is
/// 1 / (1 + c z) with c = (n-m-p)/(s^2 p) and z ~ F(n-m-p, p).
inline DensityEstimate alignment_cosine_density(std::size_t n, std::size_t m,
                                                std::size_t p, double s, Vec grid) {
  if (p < 1 || n < m + p + 1)
    throw InvalidArgumentError("alignment_cosine_density: need p >= 1 and n - m - p >= 1");
  if (s <= 0.0) throw InvalidArgumentError("alignment_cosine_density: s must be > 0");
  const double d1 = static_cast<double>(n - m - p);
  const double d2 = static_cast<double>(p);
  const double c = d1 / (s * s * d2);
  DensityEstimate est;
  est.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    if (t <= 0.0 || t >= 1.0) {
      est.values[i] = 0.0;
      continue;
    }
    const double z = (1.0 - t) / (c * t);
    est.values[i] = f_pdf(z, d1, d2) / (c * t * t);
  }
  est.grid = std::move(grid);
  return est;
}

/// P(cos <= t) under the same law.
inline double alignment_cosine_cdf(std::size_t n, std::size_t m, std::size_t p, double s,
                                   double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double d1 = static_cast<double>(n - m - p);
  const double d2 = static_cast<double>(p);
  const double c = d1 / (s * s * d2);
  const double z = (1.0 - t) / (c * t);
  return 1.0 - f_cdf(z, d1, d2);
}

}  // namespace projuq
