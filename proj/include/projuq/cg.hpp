#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "projuq/errors.hpp"
#include "projuq/matrix.hpp"
#include "projuq/vec.hpp"

namespace projuq {

/// What the conjugate gradient trace retains. Scalars (step sizes,
/// curvatures, residual norms, gains) are always kept; vector storage can be
/// narrowed for large problems.
struct CgKeep {
  /// Store x_i when i is a multiple of the stride (0 disables storage; the
  /// final iterate is always available through solution()).
  std::size_t iterate_stride = 1;
  bool residual_vectors = true;
  std::size_t directions_lo = 1;  // 1-based window of stored directions
  std::size_t directions_hi = std::numeric_limits<std::size_t>::max();
  /// Optional early stop once ||r_i|| <= stop_rel_residual * ||b||; zero
  /// keeps the fixed-sweep behaviour.
  double stop_rel_residual = 0.0;
};

/// Record of a conjugate gradient run: iterates x_i, residuals r_i = b - A x_i,
/// directions v_i, step sizes gamma_i, curvatures eta_i = v_i^T A v_i and
/// per-iteration gains g_i = gamma_i ||r_{i-1}||^2. Iteration indices are
/// 1-based to match the recurrence; r_0 and x_0 are the initial data.
class CgTrace {
 public:
  /// Number of completed iterations (may stop short of the request when the
  /// residual vanishes exactly).
  std::size_t iterations() const { return gamma_.size(); }
  std::size_t dim() const { return x_final_.size(); }

  double gamma(std::size_t i) const { return gamma_.at(i - 1); }
  double eta(std::size_t i) const { return eta_.at(i - 1); }
  /// g_i = gamma_i ||r_{i-1}||^2
  double gain(std::size_t i) const { return gamma_.at(i - 1) * rr_.at(i - 1); }
  /// ||r_i||, i = 0..iterations()
  double residual_norm(std::size_t i) const { return std::sqrt(rr_.at(i)); }

  const Vec& solution() const { return x_final_; }

  const Vec& iterate(std::size_t i) const {
    if (keep_.iterate_stride == 0 || i % keep_.iterate_stride != 0)
      throw InvalidArgumentError("CgTrace: iterate " + std::to_string(i) + " not stored");
    return iterates_.at(i / keep_.iterate_stride);
  }

  const Vec& residual_vector(std::size_t i) const {
    if (residuals_.empty()) throw InvalidArgumentError("CgTrace: residual vectors not stored");
    return residuals_.at(i);
  }

  const Vec& direction(std::size_t i) const {
    if (i < keep_.directions_lo || i > keep_.directions_hi || i - keep_.directions_lo >= directions_.size())
      throw InvalidArgumentError("CgTrace: direction " + std::to_string(i) + " not stored");
    return directions_[i - keep_.directions_lo];
  }

  /// The sequence g_1 .. g_T; telescopes to A-norm error differences.
  Vec gains() const {
    Vec g(iterations());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = gamma_[i] * rr_[i];
    return g;
  }

 private:
  friend CgTrace cg(const MatrixHandle&, const Vec&, const Vec&, std::size_t,
                    const CgKeep&);

  CgKeep keep_;
  std::vector<double> gamma_, eta_, rr_;  // rr_[i] = ||r_i||^2, length T + 1
  std::vector<Vec> iterates_;             // x_0 .. x_T
  std::vector<Vec> residuals_;            // r_0 .. r_T
  std::vector<Vec> directions_;           // window of v_i
  Vec x_final_;
};

/// Plain conjugate gradient, m sweeps, no preconditioning. Stops early only
/// when the residual vanishes exactly; a nonpositive curvature on a nonzero
/// direction reports NotSpdError.
inline CgTrace cg(const MatrixHandle& a, const Vec& b, const Vec& x0, std::size_t m,
                  const CgKeep& keep = {}) {
  if (a.rows() != a.cols()) throw DimensionError("cg: square matrix required");
  if (b.size() != a.rows() || x0.size() != a.rows())
    throw DimensionError("cg: dimension mismatch");
  CgTrace trace;
  trace.keep_ = keep;
  Vec x = x0;
  Vec r = sub(b, a.apply(x));
  Vec v = r;
  double rr = dot(r, r);
  const double stop_rr = keep.stop_rel_residual > 0.0
                             ? keep.stop_rel_residual * keep.stop_rel_residual * dot(b, b)
                             : 0.0;
  trace.rr_.push_back(rr);
  if (keep.iterate_stride > 0) trace.iterates_.push_back(x);
  if (keep.residual_vectors) trace.residuals_.push_back(r);
  for (std::size_t i = 1; i <= m; ++i) {
    if (rr == 0.0 || (stop_rr > 0.0 && rr <= stop_rr)) break;
    Vec av = a.apply(v);
    const double eta = dot(v, av);
    if (eta <= 0.0) {
      if (dot(v, v) == 0.0) break;
      throw NotSpdError("cg: nonpositive curvature at iteration " + std::to_string(i));
    }
    const double gamma = rr / eta;
    axpy(gamma, v, x);
    axpy(-gamma, av, r);
    const double rr_new = dot(r, r);
    const double delta = rr_new / rr;
    trace.gamma_.push_back(gamma);
    trace.eta_.push_back(eta);
    trace.rr_.push_back(rr_new);
    if (keep.iterate_stride > 0 && i % keep.iterate_stride == 0)
      trace.iterates_.push_back(x);
    if (keep.residual_vectors) trace.residuals_.push_back(r);
    if (i >= keep.directions_lo && i <= keep.directions_hi) trace.directions_.push_back(v);
    // v_{i+1} = r_i + delta_i v_i
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = r[j] + delta * v[j];
    rr = rr_new;
  }
  trace.x_final_ = std::move(x);
  return trace;
}

/// Per-iteration gains gamma_i ||r_{i-1}||^2 of a finished run.
inline Vec gain_sequence(const CgTrace& trace) { return trace.gains(); }

}  // namespace projuq
