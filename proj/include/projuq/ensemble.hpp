#pragma once

#include <cstdint>
#include <cstddef>

#include "projuq/decomp.hpp"
#include "projuq/errors.hpp"
#include "projuq/matrix.hpp"
#include "projuq/rng.hpp"

namespace projuq {

/// Ensemble of random SPD matrices A = U D U^T with Haar eigenvectors and
/// exponentially distributed eigenvalues.
struct SpdEnsembleSpec {
  std::size_t n = 100;
  double scale = 10.0;  // mean of the eigenvalue distribution
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1) throw InvalidArgumentError("SpdEnsembleSpec: n must be >= 1");
    if (scale <= 0.0) throw InvalidArgumentError("SpdEnsembleSpec: scale must be > 0");
  }
};

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with each Q
/// column flipped to the sign of the matching R diagonal, which removes the
/// sign ambiguity and makes the distribution exactly uniform.
inline Mat haar_orthogonal(std::size_t n, Rng& rng) {
  Mat g(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) g(i, j) = rng.gaussian();
  QrResult qr = householder_qr(g, /*full_q=*/false);
  for (std::size_t j = 0; j < n; ++j) {
    if (qr.r(j, j) < 0.0)
      for (std::size_t i = 0; i < n; ++i) qr.q(i, j) = -qr.q(i, j);
  }
  return qr.q;
}

/// Draw A = U D U^T with U Haar and D_ii ~ Exp(scale). Symmetry is enforced
/// exactly by averaging the numerically formed product with its transpose.
inline MatrixHandle random_spd(const SpdEnsembleSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n = spec.n;
  Mat u = haar_orthogonal(n, rng);
  Vec d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = rng.exponential(spec.scale);
  Mat ud(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) ud(i, j) = u(i, j) * d[j];
  Mat a = ud.multiply(u.transposed());
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) {
      const double s = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = s;
      a(j, i) = s;
    }
  return MatrixHandle(std::move(a), /*symmetric=*/true);
}

inline MatrixHandle random_spd(const SpdEnsembleSpec& spec) {
  Rng rng(spec.seed);
  return random_spd(spec, rng);
}

}  // namespace projuq
