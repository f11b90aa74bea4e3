#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "projuq/errors.hpp"
#include "projuq/matrix.hpp"
#include "projuq/vec.hpp"

namespace projuq {

/// Dense LU with partial pivoting.
class LuFactor {
 public:
  explicit LuFactor(Mat a) : lu_(std::move(a)) {
    if (lu_.rows() != lu_.cols()) throw DimensionError("lu: matrix must be square");
    const std::size_t n = lu_.rows();
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          p = i;
        }
      }
      if (best == 0.0) throw SingularMatrixError("lu: exact zero pivot");
      if (p != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
        std::swap(perm_[k], perm_[p]);
        sign_ = -sign_;
      }
      const double pivot = lu_(k, k);
      auto col_k = lu_.col(k);
      for (std::size_t i = k + 1; i < n; ++i) col_k[i] /= pivot;
      for (std::size_t j = k + 1; j < n; ++j) {
        const double ukj = lu_(k, j);
        if (ukj == 0.0) continue;
        auto col_j = lu_.col(j);
        for (std::size_t i = k + 1; i < n; ++i) col_j[i] -= col_k[i] * ukj;
      }
    }
  }

  std::size_t size() const { return lu_.rows(); }

  /// Cheap conditioning proxy: ratio of extreme |U_ii|.
  double condition_estimate() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < lu_.rows(); ++i) {
      const double d = std::abs(lu_(i, i));
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
  }

  double log_abs_det() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lu_.rows(); ++i) s += std::log(std::abs(lu_(i, i)));
    return s;
  }

  Vec solve(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw DimensionError("lu solve: dimension mismatch");
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 1; i < n; ++i) {
      double s = x[i];
      for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * x[j];
      x[ii] = s / lu_(ii, ii);
    }
    return x;
  }

  Mat solve_mat(const Mat& b) const {
    Mat x(b.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Vec xj = solve(b.col(j));
      std::copy(xj.begin(), xj.end(), x.col(j).begin());
    }
    return x;
  }

  Mat inverse() const { return solve_mat(Mat::identity(size())); }

 private:
  Mat lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
};

/// Lower Cholesky factor of an SPD matrix; throws NotSpdError otherwise.
inline Mat cholesky(const Mat& a) {
  if (a.rows() != a.cols()) throw DimensionError("cholesky: matrix must be square");
  const std::size_t n = a.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 0.0 || !std::isfinite(d)) throw NotSpdError("cholesky: nonpositive pivot");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

inline Vec cholesky_solve(const Mat& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw DimensionError("cholesky_solve: dimension mismatch");
  Vec x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * x[j];
    x[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l(j, ii) * x[j];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

/// Inverse of lower-triangular L, applied as x -> L^{-T} x.
inline Vec lower_transpose_solve(const Mat& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw DimensionError("lower_transpose_solve: dimension mismatch");
  Vec x(b.begin(), b.end());
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l(j, ii) * x[j];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

/// Rank-revealing Cholesky of a PSD matrix with diagonal pivoting.
/// Returns an n x r factor F (permuted back) with F F^T ~ a.
inline Mat pivoted_cholesky_psd(Mat a, double rel_tol = 1e-12) {
  if (a.rows() != a.cols()) throw DimensionError("pivoted_cholesky_psd: square input required");
  const std::size_t n = a.rows();
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;
  Mat f(n, n);
  double max_diag0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag0 = std::max(max_diag0, a(i, i));
  const double tol = rel_tol * std::max(max_diag0, 0.0);
  std::size_t r = 0;
  for (; r < n; ++r) {
    std::size_t p = r;
    double best = a(piv[r], piv[r]);
    for (std::size_t i = r + 1; i < n; ++i) {
      if (a(piv[i], piv[i]) > best) {
        best = a(piv[i], piv[i]);
        p = i;
      }
    }
    if (best <= tol) break;
    std::swap(piv[r], piv[p]);
    const std::size_t pr = piv[r];
    const double d = std::sqrt(best);
    f(pr, r) = d;
    for (std::size_t i = r + 1; i < n; ++i) {
      const std::size_t pi = piv[i];
      double s = a(pi, pr);
      for (std::size_t k = 0; k < r; ++k) s -= f(pi, k) * f(pr, k);
      f(pi, r) = s / d;
    }
    for (std::size_t i = r + 1; i < n; ++i) {
      const std::size_t pi = piv[i];
      a(pi, pi) -= f(pi, r) * f(pi, r);
    }
  }
  return f.block(0, 0, n, r);
}

/// Householder QR. With full_q the Q factor is n x n (orthonormal completion
/// of the column span); otherwise thin n x k.
struct QrResult {
  Mat q;
  Mat r;  // k x k upper triangular (thin) or n x k (full)
};

inline QrResult householder_qr(const Mat& a, bool full_q = false) {
  const std::size_t n = a.rows(), k = a.cols();
  if (k > n) throw DimensionError("householder_qr: more columns than rows");
  Mat work = a;
  std::vector<Vec> reflectors;
  reflectors.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    Vec v(n - j);
    for (std::size_t i = j; i < n; ++i) v[i - j] = work(i, j);
    double alpha = norm2(v);
    if (alpha == 0.0) {
      reflectors.push_back(Vec(n - j, 0.0));
      continue;
    }
    if (v[0] > 0) alpha = -alpha;
    v[0] -= alpha;
    const double vn = norm2(v);
    if (vn > 0) scale(1.0 / vn, v);
    // apply reflector to trailing columns
    for (std::size_t c = j; c < k; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < n; ++i) s += v[i - j] * work(i, c);
      s *= 2.0;
      for (std::size_t i = j; i < n; ++i) work(i, c) -= s * v[i - j];
    }
    reflectors.push_back(std::move(v));
  }
  QrResult out;
  const std::size_t qcols = full_q ? n : k;
  out.q = Mat(n, qcols);
  for (std::size_t j = 0; j < qcols; ++j) out.q(j, j) = 1.0;
  // accumulate Q = H_0 H_1 ... H_{k-1} applied to identity columns
  for (std::size_t c = 0; c < qcols; ++c) {
    auto qc = out.q.col(c);
    for (std::size_t j = k; j-- > 0;) {
      const Vec& v = reflectors[j];
      double s = 0.0;
      for (std::size_t i = j; i < n; ++i) s += v[i - j] * qc[i];
      s *= 2.0;
      for (std::size_t i = j; i < n; ++i) qc[i] -= s * v[i - j];
    }
  }
  out.r = full_q ? work : work.block(0, 0, k, k);
  return out;
}

/// Householder QR with column pivoting: a P = Q R with |R_00| >= |R_11| >= ...
/// Q is thin (n x k), R is k x k upper triangular, perm maps pivoted column
/// position to original column index.
struct PivotedQrResult {
  Mat q;
  Mat r;
  std::vector<std::size_t> perm;

  std::size_t numerical_rank(double rel_tol) const {
    const std::size_t k = r.cols();
    if (k == 0) return 0;
    const double cutoff = rel_tol * std::abs(r(0, 0));
    std::size_t rank = 0;
    while (rank < k && std::abs(r(rank, rank)) > cutoff) ++rank;
    return rank;
  }
};

inline PivotedQrResult householder_qr_pivoted(const Mat& a) {
  const std::size_t n = a.rows(), k = a.cols();
  if (k > n) throw DimensionError("householder_qr_pivoted: more columns than rows");
  Mat work = a;
  std::vector<std::size_t> perm(k);
  std::vector<double> colnorm2(k);
  for (std::size_t j = 0; j < k; ++j) {
    perm[j] = j;
    colnorm2[j] = dot(work.col(j), work.col(j));
  }
  std::vector<Vec> reflectors;
  reflectors.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    // pivot: move the column with the largest remaining norm to position j
    std::size_t p = j;
    for (std::size_t c = j + 1; c < k; ++c)
      if (colnorm2[c] > colnorm2[p]) p = c;
    if (p != j) {
      for (std::size_t i = 0; i < n; ++i) std::swap(work(i, j), work(i, p));
      std::swap(colnorm2[j], colnorm2[p]);
      std::swap(perm[j], perm[p]);
    }
    Vec v(n - j);
    for (std::size_t i = j; i < n; ++i) v[i - j] = work(i, j);
    double alpha = norm2(v);
    if (alpha != 0.0) {
      if (v[0] > 0) alpha = -alpha;
      v[0] -= alpha;
      const double vn = norm2(v);
      if (vn > 0) scale(1.0 / vn, v);
      for (std::size_t c = j; c < k; ++c) {
        double s = 0.0;
        for (std::size_t i = j; i < n; ++i) s += v[i - j] * work(i, c);
        s *= 2.0;
        for (std::size_t i = j; i < n; ++i) work(i, c) -= s * v[i - j];
      }
    }
    reflectors.push_back(std::move(v));
    for (std::size_t c = j + 1; c < k; ++c)
      colnorm2[c] = std::max(0.0, colnorm2[c] - work(j, c) * work(j, c));
  }
  PivotedQrResult out;
  out.perm = std::move(perm);
  out.q = Mat(n, k);
  for (std::size_t j = 0; j < k; ++j) out.q(j, j) = 1.0;
  for (std::size_t c = 0; c < k; ++c) {
    auto qc = out.q.col(c);
    for (std::size_t j = k; j-- > 0;) {
      const Vec& v = reflectors[j];
      if (v.empty()) continue;
      double s = 0.0;
      for (std::size_t i = j; i < n; ++i) s += v[i - j] * qc[i];
      s *= 2.0;
      for (std::size_t i = j; i < n; ++i) qc[i] -= s * v[i - j];
    }
  }
  out.r = work.block(0, 0, k, k);
  return out;
}

/// Thin SVD a = U diag(sigma) V^T via one-sided Jacobi on the columns.
/// Requires rows >= cols. Singular values are sorted descending.
struct SvdResult {
  Mat u;       // n x k
  Vec sigma;   // k, descending, >= 0
  Mat v;       // k x k
};

inline SvdResult jacobi_svd(const Mat& a) {
  const std::size_t n = a.rows(), k = a.cols();
  if (k > n) {
    SvdResult t = jacobi_svd(a.transposed());
    return SvdResult{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  Mat u = a;
  Mat v = Mat::identity(k);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < 60; ++sweep) {
    std::size_t rotations = 0;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        const double app = dot(u.col(p), u.col(p));
        const double aqq = dot(u.col(q), u.col(q));
        const double apq = dot(u.col(p), u.col(q));
        if (apq == 0.0 || std::abs(apq) <= 10 * eps * std::sqrt(app * aqq)) continue;
        ++rotations;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        auto up = u.col(p), uq = u.col(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = up[i], y = uq[i];
          up[i] = c * x - s * y;
          uq[i] = s * x + c * y;
        }
        auto vp = v.col(p), vq = v.col(q);
        for (std::size_t i = 0; i < k; ++i) {
          const double x = vp[i], y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (rotations == 0) break;
  }
  SvdResult out;
  out.sigma.resize(k);
  std::vector<std::size_t> order(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.sigma[j] = norm2(u.col(j));
    order[j] = j;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return out.sigma[x] > out.sigma[y]; });
  SvdResult sorted;
  sorted.u = Mat(n, k);
  sorted.v = Mat(k, k);
  sorted.sigma.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t src = order[j];
    sorted.sigma[j] = out.sigma[src];
    auto uc = u.col(src);
    const double inv = sorted.sigma[j] > 0 ? 1.0 / sorted.sigma[j] : 0.0;
    for (std::size_t i = 0; i < n; ++i) sorted.u(i, j) = uc[i] * inv;
    for (std::size_t i = 0; i < k; ++i) sorted.v(i, j) = v(i, src);
  }
  return sorted;
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues ascending; a = V diag(w) V^T.
struct EighResult {
  Vec eigenvalues;
  Mat eigenvectors;
};

inline EighResult jacobi_eigh(Mat a) {
  if (a.rows() != a.cols()) throw DimensionError("jacobi_eigh: square input required");
  const std::size_t n = a.rows();
  Mat v = Mat::identity(n);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += std::abs(a(i, i));
      for (std::size_t j = i + 1; j < n; ++j) off += std::abs(a(i, j));
    }
    if (off <= n * eps * (diag + off)) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  EighResult out;
  out.eigenvalues.resize(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.eigenvalues[i] = a(i, i);
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return out.eigenvalues[x] < out.eigenvalues[y];
  });
  EighResult sorted;
  sorted.eigenvalues.resize(n);
  sorted.eigenvectors = Mat(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    sorted.eigenvalues[j] = out.eigenvalues[order[j]];
    for (std::size_t i = 0; i < n; ++i) sorted.eigenvectors(i, j) = v(i, order[j]);
  }
  return sorted;
}

}  // namespace projuq
