#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "projuq/basis.hpp"
#include "projuq/decomp.hpp"
#include "projuq/errors.hpp"
#include "projuq/matrix.hpp"

namespace projuq {

/// Relative tolerance of the support-membership gate for degenerate
/// covariances.
inline constexpr double kSupportTolerance = 1e-8;

/// Low-rank covariance Sigma = factor factor^T, held only through its n x k
/// factor. Columns need not be orthogonal.
struct CovarianceFactor {
  Mat factor;

  std::size_t dim() const { return factor.rows(); }
  std::size_t rank() const { return factor.cols(); }

  static CovarianceFactor zero(std::size_t n) { return CovarianceFactor{Mat(n, 0)}; }
  static CovarianceFactor identity(std::size_t n) {
    return CovarianceFactor{Mat::identity(n)};
  }

  /// factor * y for y of length rank().
  Vec apply_factor(std::span<const double> y) const { return factor.apply(y); }

  Mat densify() const {
    if (rank() == 0) return Mat(dim(), dim());
    return factor.multiply(factor.transposed());
  }

  CovarianceFactor scaled(double s) const {
    if (s < 0.0) throw InvalidArgumentError("CovarianceFactor::scaled: negative scale");
    return CovarianceFactor{factor * std::sqrt(s)};
  }
};

/// Prepared pseudo-inverse quadratic form of one covariance factor: caches a
/// pivoted QR so repeated evaluations stay O(n k). Never forms Sigma^dagger.
class CovarianceQuad {
 public:
  explicit CovarianceQuad(const CovarianceFactor& cov) : n_(cov.dim()) {
    if (cov.rank() == 0) return;
    // wide factors (more columns than rows) are first compressed to an
    // n x n triangular factor: F F^T = R^T R for F^T = Q R
    Mat compressed;
    const Mat* factor = &cov.factor;
    if (cov.factor.cols() > cov.factor.rows()) {
      QrResult lq = householder_qr(cov.factor.transposed(), false);
      compressed = lq.r.transposed();
      factor = &compressed;
    }
    PivotedQrResult qr = householder_qr_pivoted(*factor);
    rank_ = qr.numerical_rank(kRankTolerance);
    if (rank_ == 0) return;
    q1_ = qr.q.block(0, 0, n_, rank_);
    // B = R1 R1^T over the leading r rows of R; Sigma = Q1 B Q1^T
    const std::size_t k = qr.r.cols();
    Mat r1(rank_, k);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < rank_ && i <= j; ++i) r1(i, j) = qr.r(i, j);
    Mat b = r1.multiply(r1.transposed());
    chol_b_ = cholesky(b);
  }

  std::size_t dim() const { return n_; }
  std::size_t rank() const { return rank_; }

  /// Orthogonal projection of v onto range(Sigma).
  Vec project(std::span<const double> v) const {
    if (rank_ == 0) return Vec(n_, 0.0);
    Vec c = q1_.apply_transpose(v);
    return q1_.apply(c);
  }

  /// Norm of the component of v outside range(Sigma).
  double range_residual(std::span<const double> v) const {
    Vec p = project(v);
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - p[i];
      s += d * d;
    }
    return std::sqrt(s);
  }

  /// v^T Sigma^dagger v for v in range(Sigma); no support check here.
  double quadform_unchecked(std::span<const double> v) const {
    if (rank_ == 0) return 0.0;
    Vec c = q1_.apply_transpose(v);
    Vec y = cholesky_solve(chol_b_, c);
    return dot(c, y);
  }

  /// Sum of logs of the nonzero eigenvalues of Sigma.
  double log_det_nonzero() const {
    double s = 0.0;
    for (std::size_t i = 0; i < rank_; ++i) s += std::log(chol_b_(i, i));
    return 2.0 * s;
  }

 private:
  std::size_t n_;
  std::size_t rank_ = 0;
  Mat q1_;
  Mat chol_b_;
};

/// v^T Sigma^dagger v computed through a thin factorization of the factor.
/// Throws OutOfRangeError when v has a component outside range(Sigma) above
/// kSupportTolerance * ||v||.
inline double pseudo_quadform(const CovarianceFactor& cov, std::span<const double> v) {
  if (v.size() != cov.dim()) throw DimensionError("pseudo_quadform: dimension mismatch");
  CovarianceQuad quad(cov);
  const double vn = norm2(v);
  const double leak = quad.range_residual(v);
  if (leak > kSupportTolerance * vn)
    throw OutOfRangeError("pseudo_quadform: vector leaves range of covariance");
  return quad.quadform_unchecked(v);
}

/// Factor of a dense PSD matrix (rank revealed by pivoted Cholesky).
inline CovarianceFactor factor_from_dense_psd(const Mat& sigma, double rel_tol = kRankTolerance) {
  return CovarianceFactor{pivoted_cholesky_psd(sigma, rel_tol)};
}

}  // namespace projuq
