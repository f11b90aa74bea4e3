#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "projuq/calibration.hpp"
#include "projuq/cg.hpp"
#include "projuq/covariance.hpp"
#include "projuq/decomp.hpp"
#include "projuq/distributions.hpp"
#include "projuq/ensemble.hpp"
#include "projuq/errors.hpp"
#include "projuq/parallel.hpp"
#include "projuq/projection.hpp"
#include "projuq/special.hpp"

namespace projuq {

/// Theoretical law a statistic is compared against.
struct StatTarget {
  enum class Family { chi2, f };
  Family family = Family::chi2;
  double d1 = 1.0;
  double d2 = 0.0;

  static StatTarget chi2(double dof) { return StatTarget{Family::chi2, dof, 0.0}; }
  static StatTarget f(double d1, double d2) { return StatTarget{Family::f, d1, d2}; }

  double pdf(double x) const {
    return family == Family::chi2 ? chi2_pdf(x, d1) : f_pdf(x, d1, d2);
  }
  double cdf(double x) const {
    return family == Family::chi2 ? chi2_cdf(x, d1) : f_cdf(x, d1, d2);
  }
  double quantile(double q) const {
    double lo = 0.0, hi = 1.0;
    while (cdf(hi) < q) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  std::string label() const {
    char buf[64];
    if (family == Family::chi2)
      std::snprintf(buf, sizeof(buf), "chi2(%g)", d1);
    else
      std::snprintf(buf, sizeof(buf), "f(%g,%g)", d1, d2);
    return buf;
  }
};

/// Prior families compared by the assessment harness.
enum class PriorMode { trivial, a_inverse, ata_inverse, cheap, expensive };

inline const char* to_string(PriorMode m) {
  switch (m) {
    case PriorMode::trivial: return "trivial";
    case PriorMode::a_inverse: return "a_inverse";
    case PriorMode::ata_inverse: return "ata_inverse";
    case PriorMode::cheap: return "cheap";
    case PriorMode::expensive: return "expensive";
  }
  return "?";
}

inline const char* to_string(KrylovVariant v) {
  return v == KrylovVariant::cg_like ? "cg_like" : "gmres_like";
}

/// Point estimation plugs E[s] into the covariance and compares against
/// chi-squared; hierarchical marginalizes the scale and compares the
/// normalized statistic against an F law.
enum class StatisticRegime { point_estimation, hierarchical };

inline const char* to_string(StatisticRegime r) {
  return r == StatisticRegime::point_estimation ? "point" : "hierarchical";
}

/// How exact solutions are drawn: the standard-normal convention, or
/// consistently with the structured prior itself (the well-specified case in
/// which calibration is provably exact).
enum class SolutionSampling { standard_normal, prior_consistent };

struct AssessmentSpec {
  std::size_t n = 100;
  double matrix_scale = 10.0;
  std::size_t m = 10;
  std::size_t matrices = 50;           // M
  std::size_t samples_per_matrix = 5;  // N
  KrylovVariant variant = KrylovVariant::cg_like;
  PriorMode prior_mode = PriorMode::expensive;
  StatisticRegime regime = StatisticRegime::point_estimation;
  SolutionSampling sampling = SolutionSampling::standard_normal;
  std::size_t observations = 1;  // k for the expensive mode
  ScalePosterior scale_prior;    // improper (0, 0) by default
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;

  void validate() const {
    if (n < 1 || m > n) throw InvalidArgumentError("AssessmentSpec: need 1 <= m <= n");
    if (matrices < 1 || samples_per_matrix < 1)
      throw InvalidArgumentError("AssessmentSpec: M, N must be >= 1");
    if (matrix_scale <= 0.0) throw InvalidArgumentError("AssessmentSpec: scale must be > 0");
    if ((prior_mode == PriorMode::a_inverse || prior_mode == PriorMode::ata_inverse) &&
        n > 512)
      throw InvalidArgumentError(
          "AssessmentSpec: dense baseline priors are limited to n <= 512");
    if (regime == StatisticRegime::hierarchical &&
        (prior_mode == PriorMode::trivial || prior_mode == PriorMode::a_inverse ||
         prior_mode == PriorMode::ata_inverse))
      throw InvalidArgumentError(
          "AssessmentSpec: hierarchical regime needs a scale-calibrated prior mode");
    if (sampling == SolutionSampling::prior_consistent &&
        regime == StatisticRegime::hierarchical)
      throw InvalidArgumentError(
          "AssessmentSpec: prior-consistent sampling is a point-estimation oracle");
    if (prior_mode == PriorMode::expensive && observations < 1)
      throw InvalidArgumentError("AssessmentSpec: expensive mode needs k >= 1");
  }
};

/// Statistic samples plus the law they are tested against.
struct StatisticSeries {
  std::vector<double> samples;
  StatTarget target;
  std::size_t m = 0;
  std::size_t breakdowns = 0;
  std::size_t support_clamps = 0;  // errors projected back onto range(Sigma_m)
  double max_leak = 0.0;           // largest clamped component
};

/// Z-statistic: squared error in the pseudo-inverse covariance norm,
/// optionally divided by the covariance rank for F-type comparisons.
inline double z_statistic(const Vec& xstar, const Vec& xm, const CovarianceFactor& sigma_m,
                          bool normalize) {
  Vec e = sub(xstar, xm);
  const double q = pseudo_quadform(sigma_m, e);  // throws OutOfRangeError off support
  if (!normalize) return q;
  CovarianceQuad quad(sigma_m);
  return q / static_cast<double>(quad.rank());
}

/// Clamped variant used by the harness: the error is projected onto
/// range(Sigma_m) and the discarded component reported, never thrown.
struct ClampedStatistic {
  double value = 0.0;
  double leak = 0.0;
  bool clamped = false;
};

inline ClampedStatistic z_statistic_clamped(const Vec& xstar, const Vec& xm,
                                            const CovarianceFactor& sigma_m,
                                            bool normalize) {
  Vec e = sub(xstar, xm);
  CovarianceQuad quad(sigma_m);
  ClampedStatistic out;
  out.leak = quad.range_residual(e);
  out.clamped = out.leak > kSupportTolerance * std::max(norm2(e), 1e-300);
  Vec pe = quad.project(e);
  out.value = quad.quadform_unchecked(pe);
  if (normalize && quad.rank() > 0) out.value /= static_cast<double>(quad.rank());
  return out;
}

namespace detail {

/// Per-draw statistic for the projector-shaped posteriors (cheap/expensive):
/// the quadratic form collapses to the squared norm of the projected error.
inline ClampedStatistic projector_statistic(const FactoredProjector& p2, const Vec& e,
                                            double denom) {
  ClampedStatistic out;
  Vec pe = p2.apply(e);
  Vec off = sub(e, pe);
  out.leak = norm2(off);
  out.clamped = out.leak > kSupportTolerance * std::max(norm2(e), 1e-300);
  out.value = dot(pe, pe) / denom;
  return out;
}

struct MatrixCell {
  std::vector<double> samples;
  std::size_t breakdowns = 0;
  std::size_t clamps = 0;
  double max_leak = 0.0;
};

}  // namespace detail

/// Ensemble assessment: draw M matrices, N solution draws each, solve with
/// the chosen projection process and accumulate the calibrated statistic.
/// Breakdowns are skipped and counted; more than 10% aborts the run.
inline StatisticSeries run_assessment(const AssessmentSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  const std::size_t m = spec.m;
  const double nm = static_cast<double>(n - m);
  const double k_obs = static_cast<double>(spec.observations);

  StatTarget target = StatTarget::chi2(nm);
  if (spec.regime == StatisticRegime::hierarchical) {
    const double alpha_post =
        spec.prior_mode == PriorMode::cheap
            ? spec.scale_prior.alpha + 0.5 * static_cast<double>(m)
            : spec.scale_prior.alpha + 0.5 * k_obs * nm;
    target = StatTarget::f(nm, 2.0 * alpha_post);
  }

  std::vector<detail::MatrixCell> cells(spec.matrices);
  parallel_for(spec.matrices, spec.threads, [&](std::size_t mi) {
    detail::MatrixCell& cell = cells[mi];
    Rng rng = Rng::child(spec.master_seed, mi);
    SpdEnsembleSpec mspec{n, spec.matrix_scale, 0};
    MatrixHandle a = random_spd(mspec, rng);
    for (std::size_t draw = 0; draw < spec.samples_per_matrix; ++draw) {
      try {
        if (spec.sampling == SolutionSampling::prior_consistent) {
          // b-independent pair seeded by rho, then x* drawn from the
          // structured prior the pair induces (G = I)
          Vec rho(n);
          for (double& r : rho) r = rng.gaussian();
          KrylovOptions opt;
          opt.seed_vector = rho;
          ProjectionPair pair = m == n ? full_space_pair(a)
                                       : krylov_pair(a, rho, m, spec.variant, opt);
          FactoredProjector p2 = make_orthogonal_projector(a, pair.constraint_basis());
          Vec v_coeff(m), y(n);
          for (double& c : v_coeff) c = rng.gaussian();
          for (double& c : y) c = rng.gaussian();
          Vec xstar = pair.search_basis().apply(v_coeff);
          axpy(1.0, p2.apply(y), xstar);
          Vec b = a.apply(xstar);
          Vec xt = petrov_galerkin_solve(a, b, Vec(n, 0.0), pair);
          Vec e = sub(xstar, xt);
          auto st = detail::projector_statistic(p2, e, 1.0);
          cell.samples.push_back(st.value);
          if (st.clamped) ++cell.clamps;
          cell.max_leak = std::max(cell.max_leak, st.leak);
          continue;
        }

        Vec xstar(n);
        for (double& c : xstar) c = rng.gaussian();
        Vec b = a.apply(xstar);
        ProjectionPair pair =
            m == n ? full_space_pair(a) : krylov_pair(a, b, m, spec.variant);
        Vec xt = petrov_galerkin_solve(a, b, Vec(n, 0.0), pair);
        Vec e = sub(xstar, xt);

        if (m == n) {  // exact solve; statistic degenerates at zero
          cell.samples.push_back(0.0);
          cell.max_leak = std::max(cell.max_leak, norm2(e));
          continue;
        }

        ClampedStatistic st;
        switch (spec.prior_mode) {
          case PriorMode::trivial: {
            st = z_statistic_clamped(xstar, xt, CovarianceFactor::zero(n), false);
            break;
          }
          case PriorMode::a_inverse:
          case PriorMode::ata_inverse: {
            Mat dense_a = a.densify();
            Mat sigma0_factor;
            if (spec.prior_mode == PriorMode::a_inverse) {
              Mat l = cholesky(dense_a);
              Mat eye = Mat::identity(n);
              sigma0_factor = Mat(n, n);
              for (std::size_t j = 0; j < n; ++j) {
                Vec col = lower_transpose_solve(l, eye.col(j));
                std::copy(col.begin(), col.end(), sigma0_factor.col(j).begin());
              }
            } else {
              sigma0_factor = LuFactor(dense_a).inverse();
            }
            GaussianPosterior post = general_posterior(
                CovarianceFactor{std::move(sigma0_factor)}, a, pair.constraint_basis(),
                b, Vec(n, 0.0));
            st = z_statistic_clamped(xstar, post.mean, post.cov, false);
            break;
          }
          case PriorMode::cheap: {
            CalibrationResult calib =
                calibrate_cheap(a, b, Vec(n, 0.0), pair, spec.scale_prior);
            FactoredProjector p2 =
                make_orthogonal_projector(a, pair.constraint_basis());
            const double denom =
                spec.regime == StatisticRegime::point_estimation
                    ? calib.point_scale()
                    : nm * calib.posterior.beta / calib.posterior.alpha;
            st = detail::projector_statistic(p2, e, denom);
            break;
          }
          case PriorMode::expensive: {
            CalibrationResult calib = calibrate_by_observation(
                a, krylov_proj_builder(spec.variant),
                [n](Rng& r) {
                  Vec x(n);
                  for (double& c : x) c = r.gaussian();
                  return x;
                },
                m, spec.observations, spec.scale_prior, StatisticKind::Z, rng,
                ErrorProjectionMode::factored);
            FactoredProjector p2 =
                make_orthogonal_projector(a, pair.constraint_basis());
            const double denom =
                spec.regime == StatisticRegime::point_estimation
                    ? calib.point_scale()
                    : nm * calib.posterior.beta / calib.posterior.alpha;
            st = detail::projector_statistic(p2, e, denom);
            break;
          }
        }
        cell.samples.push_back(st.value);
        if (st.clamped) ++cell.clamps;
        cell.max_leak = std::max(cell.max_leak, st.leak);
      } catch (const BreakdownError&) {
        ++cell.breakdowns;
      }
    }
  });

  StatisticSeries series;
  series.target = target;
  series.m = m;
  for (const auto& cell : cells) {
    series.samples.insert(series.samples.end(), cell.samples.begin(), cell.samples.end());
    series.breakdowns += cell.breakdowns;
    series.support_clamps += cell.clamps;
    series.max_leak = std::max(series.max_leak, cell.max_leak);
  }
  const std::size_t attempted = spec.matrices * spec.samples_per_matrix;
  if (series.breakdowns * 10 > attempted)
    throw Error("run_assessment: more than 10% of draws broke down (" +
                std::to_string(series.breakdowns) + "/" + std::to_string(attempted) + ")");
  return series;
}

/// KDE-vs-target L1 discrepancy of a statistic series. The grid spans
/// [0, 99.5th percentile] of the pooled samples, widened to cover the target
/// law so that disjoint supports register as discrepancy ~2.
inline double discrepancy(const StatisticSeries& series, std::size_t grid_points = 512) {
  if (series.samples.size() < 50)
    throw InvalidArgumentError("discrepancy: need at least 50 samples");
  const double hi =
      std::max(quantile(series.samples, 0.995), series.target.quantile(0.995));
  if (!(hi > 0.0)) throw DegenerateSampleError("discrepancy: samples have no spread");
  Vec grid = center_grid(0.0, hi, grid_points);
  DensityEstimate empirical = kde(series.samples, grid);
  DensityEstimate theory =
      density_on_grid([&](double x) { return series.target.pdf(x); }, grid);
  // the Riemann sum can overshoot 2 on badly mismatched heavy-tailed samples;
  // the underlying distance cannot, so clip to the documented range
  return std::min(l1_distance(empirical, theory), 2.0);
}

}  // namespace projuq
