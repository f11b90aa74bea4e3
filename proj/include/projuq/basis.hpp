#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "projuq/decomp.hpp"
#include "projuq/errors.hpp"
#include "projuq/matrix.hpp"

namespace projuq {

/// Relative cutoff under which singular values / pivots count as zero.
inline constexpr double kRankTolerance = 1e-12;

/// n x k matrix with orthonormal columns. k may be zero.
struct OrthonormalBasis {
  Mat columns;

  std::size_t dim() const { return columns.rows(); }
  std::size_t rank() const { return columns.cols(); }

  /// Largest deviation of Q^T Q from the identity.
  double orthonormality_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < rank(); ++i)
      for (std::size_t j = i; j < rank(); ++j) {
        const double g = dot(columns.col(i), columns.col(j)) - (i == j ? 1.0 : 0.0);
        worst = std::max(worst, std::abs(g));
      }
    return worst;
  }

  /// Q Q^T x
  Vec project(std::span<const double> x) const {
    Vec y = columns.apply_transpose(x);
    return columns.apply(y);
  }

  /// (I - Q Q^T) x
  Vec project_complement(std::span<const double> x) const {
    Vec p = project(x);
    Vec out(x.begin(), x.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= p[i];
    return out;
  }
};

/// Modified Gram–Schmidt with a second orthogonalization pass. Throws
/// RankDeficientError (naming the column) when a column collapses under the
/// relative threshold kRankTolerance * ||cols||_F.
inline OrthonormalBasis orthonormalize(const Mat& cols) {
  const std::size_t n = cols.rows(), k = cols.cols();
  if (k > n) throw DimensionError("orthonormalize: more columns than rows");
  Mat q = cols;
  const double scale_ref = cols.frobenius_norm();
  for (std::size_t j = 0; j < k; ++j) {
    auto qj = q.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double h = dot(q.col(i), qj);
        axpy(-h, q.col(i), qj);
      }
    }
    const double r = norm2(qj);
    if (r < kRankTolerance * scale_ref)
      throw RankDeficientError("orthonormalize: column " + std::to_string(j) +
                               " is linearly dependent");
    scale(1.0 / r, qj);
  }
  return OrthonormalBasis{std::move(q)};
}

/// Orthonormal basis of the complement of span(u) in R^n, where u has
/// orthonormal columns. Built from the trailing columns of a full
/// Householder QR.
inline Mat orthonormal_complement(const Mat& u) {
  const std::size_t n = u.rows(), r = u.cols();
  if (r == 0) return Mat::identity(n);
  QrResult qr = householder_qr(u, /*full_q=*/true);
  return qr.q.block(0, r, n, n - r);
}

/// Orthonormal basis Y of Null(m) with ||m Y|| <= tol * ||m||. Rank is
/// decided from the singular values of m at the relative threshold
/// kRankTolerance; the basis itself comes from a Householder completion of
/// the right singular vectors. The tol argument only guards against callers
/// requesting a guarantee below what the rank cutoff can deliver.
inline OrthonormalBasis nullspace_basis(const Mat& m, double tol = 1e-10) {
  if (tol < kRankTolerance)
    throw InvalidArgumentError("nullspace_basis: tol below rank cutoff");
  const std::size_t k = m.rows(), n = m.cols();
  if (k > n) throw DimensionError("nullspace_basis: wide input expected (k <= n)");
  if (k == 0) return OrthonormalBasis{Mat::identity(n)};
  SvdResult svd = jacobi_svd(m.transposed());  // m^T = U S V^T, U spans range(m^T)
  const double smax = svd.sigma.empty() ? 0.0 : svd.sigma.front();
  std::size_t rank = 0;
  while (rank < svd.sigma.size() && svd.sigma[rank] > kRankTolerance * smax) ++rank;
  if (rank == n) return OrthonormalBasis{Mat(n, 0)};
  Mat range_mt = svd.u.block(0, 0, n, rank);
  return OrthonormalBasis{orthonormal_complement(range_mt)};
}

}  // namespace projuq
