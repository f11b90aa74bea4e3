#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace projuq;
using testsupport::random_matrix;
using testsupport::random_vector;

namespace {

// basis of the first m coordinate directions
Mat coordinate_basis(std::size_t n, std::size_t m) {
  Mat v(n, m);
  for (std::size_t j = 0; j < m; ++j) v(j, j) = 1.0;
  return v;
}

// A-orthonormalize the columns of u against each other (two MGS passes)
Mat a_orthonormalize(const MatrixHandle& a, Mat u) {
  std::vector<Vec> au;
  for (std::size_t j = 0; j < u.cols(); ++j) {
    Vec col(u.col(j).begin(), u.col(j).end());
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < j; ++i) axpy(-dot(au[i], col), u.col(i), col);
    Vec acol = a.apply(col);
    const double nrm = std::sqrt(dot(col, acol));
    scale(1.0 / nrm, col);
    scale(1.0 / nrm, acol);
    std::copy(col.begin(), col.end(), u.col(j).begin());
    au.push_back(std::move(acol));
  }
  return u;
}

}  // namespace

TEST(CalibrateCheap, DirectUpdateFormulas) {
  // A = I, V = W = first 10 coordinates of R^20, residual 2 e_1
  const std::size_t n = 20, m = 10;
  MatrixHandle a(Mat::identity(n), true);
  Mat v = coordinate_basis(n, m);
  ProjectionPair pair(a, v, v);
  Rng rng(1);
  Vec x0 = random_vector(n, rng);
  Vec b = a.apply(x0);
  b[0] += 2.0;  // delta = (2, 0, ..., 0), delta^T delta = 4
  CalibrationResult res = calibrate_cheap(a, b, x0, pair, ScalePosterior());
  EXPECT_DOUBLE_EQ(res.posterior.alpha, 5.0);
  EXPECT_DOUBLE_EQ(res.posterior.beta, 2.0);
}

TEST(CalibrateCheap, ZeroResidualKeepsBeta) {
  Rng rng(2);
  const std::size_t n = 12, m = 4;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 40.0, rng);
  Vec x0 = random_vector(n, rng);
  Vec b = a.apply(x0);
  ProjectionPair pair(a, random_matrix(n, m, rng), random_matrix(n, m, rng));
  CalibrationResult res = calibrate_cheap(a, b, x0, pair, ScalePosterior(1.5, 2.5));
  EXPECT_NEAR(res.posterior.beta, 2.5, 1e-20);
  EXPECT_DOUBLE_EQ(res.posterior.alpha, 1.5 + 0.5 * m);
}

TEST(CalibrateCheap, MatchesQuadraturePosterior) {
  Rng rng(3);
  const std::size_t n = 20, m = 6;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 100.0, rng);
  Vec b = random_vector(n, rng);
  Vec x0 = random_vector(n, rng);
  ProjectionPair pair = krylov_pair(a, b, m, KrylovVariant::cg_like);
  const ScalePosterior prior(1.0, 1.0);
  CalibrationResult res = calibrate_cheap(a, b, x0, pair, prior);
  // independent evidence: delta recomputed densely
  Vec r = sub(b, a.apply(x0));
  Mat core = pair.constraint_basis().transposed().multiply(a.dense()).multiply(
      pair.search_basis());
  Vec delta = LuFactor(core).solve(pair.constraint_basis().apply_transpose(r));
  auto quad = testsupport::ig_quadrature_posterior(prior.alpha, prior.beta,
                                                   static_cast<double>(m), dot(delta, delta));
  EXPECT_NEAR(res.posterior.alpha, quad.alpha, 1e-6 * quad.alpha);
  EXPECT_NEAR(res.posterior.beta, quad.beta, 1e-6 * quad.beta);
}

TEST(CalibrateByObservation, ShapeParameterUpdate) {
  Rng rng(4);
  const std::size_t n = 100, m = 20;
  SpdEnsembleSpec spec{n, 10.0, 4};
  MatrixHandle a = random_spd(spec, rng);
  CalibrationResult res = calibrate_by_observation(
      a, krylov_proj_builder(KrylovVariant::cg_like),
      [n](Rng& r) { return testsupport::random_vector(n, r); }, m, 1, ScalePosterior(),
      StatisticKind::Z, rng);
  EXPECT_DOUBLE_EQ(res.posterior.alpha, 40.0);
  EXPECT_EQ(res.observations, 1u);
}

TEST(CalibrateByObservation, SolutionInSearchSpaceGivesZero) {
  Rng rng(5);
  const std::size_t n = 16, m = 5;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 50.0, rng);
  Vec b0 = random_vector(n, rng);
  ProjectionPair fixed = krylov_pair(a, b0, m, KrylovVariant::cg_like);
  Mat v = fixed.search_basis();
  auto builder = [&fixed](const MatrixHandle&, const Vec&, std::size_t) { return fixed; };
  auto sampler = [&v, m](Rng& r) {
    Vec c = testsupport::random_vector(m, r);
    return v.apply(c);
  };
  const ScalePosterior prior(2.0, 3.0);
  CalibrationResult res = calibrate_by_observation(a, builder, sampler, m, 4, prior,
                                                   StatisticKind::Z, rng,
                                                   ErrorProjectionMode::factored);
  EXPECT_NEAR(res.posterior.beta, prior.beta, 1e-12);
}

TEST(CalibrateByObservation, MatchesDensifiedProjectorOracle) {
  Rng rng(6);
  const std::size_t n = 30, m = 5, k = 3;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 200.0, rng);
  // fix the observation draws up front so the oracle can replay them
  std::vector<Vec> draws;
  for (std::size_t i = 0; i < k; ++i) draws.push_back(random_vector(n, rng));
  std::size_t cursor = 0;
  auto sampler = [&draws, &cursor](Rng&) { return draws.at(cursor++); };
  const ScalePosterior prior(0.5, 0.25);
  CalibrationResult res =
      calibrate_by_observation(a, krylov_proj_builder(KrylovVariant::cg_like), sampler, m,
                               k, prior, StatisticKind::Z, rng,
                               ErrorProjectionMode::factored);
  double want = 0.0;
  for (const Vec& xstar : draws) {
    Vec b = a.apply(xstar);
    ProjectionPair pair = krylov_pair(a, b, m, KrylovVariant::cg_like);
    Mat p1 = make_oblique_projector(a, pair).densify();
    Vec e = p1.apply(xstar);
    want += 0.5 * dot(e, e);
  }
  EXPECT_NEAR(res.posterior.beta - prior.beta, want, 1e-10 * std::max(1.0, want));
  EXPECT_DOUBLE_EQ(res.posterior.alpha, prior.alpha + 0.5 * k * (n - m));

  // conjugacy against the quadrature oracle with the same evidence
  auto quad = testsupport::ig_quadrature_posterior(
      prior.alpha, prior.beta, static_cast<double>(k * (n - m)), 2.0 * want);
  EXPECT_NEAR(res.posterior.alpha, quad.alpha, 1e-6 * quad.alpha);
  EXPECT_NEAR(res.posterior.beta, quad.beta, 1e-6 * quad.beta);
}

TEST(CalibrateByObservation, SStatisticUsesEnergyNorm) {
  Rng rng(7);
  const std::size_t n = 24, m = 6;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 100.0, rng);
  Vec draw = random_vector(n, rng);
  auto sampler = [&draw](Rng&) { return draw; };
  CalibrationResult res =
      calibrate_by_observation(a, krylov_proj_builder(KrylovVariant::cg_like), sampler, m,
                               1, ScalePosterior(), StatisticKind::S, rng,
                               ErrorProjectionMode::factored);
  Vec b = a.apply(draw);
  ProjectionPair pair = krylov_pair(a, b, m, KrylovVariant::cg_like);
  FactoredProjector p1 = make_oblique_projector(a, pair);
  Vec e = p1.apply(draw);
  const double want = 0.5 * dot(e, a.apply(e));
  EXPECT_NEAR(res.posterior.beta, want, 1e-10 * std::max(1.0, want));
}

TEST(CalibrateByObservation, CgTraceModeTracksCgError) {
  Rng rng(8);
  const std::size_t n = 40, m = 12;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 300.0, rng);
  Vec draw = random_vector(n, rng);
  auto sampler = [&draw](Rng&) { return draw; };
  CalibrationResult res = calibrate_by_observation(
      a, krylov_proj_builder(KrylovVariant::cg_like), sampler, m, 1, ScalePosterior(),
      StatisticKind::Z, rng, ErrorProjectionMode::cg_trace);
  CgTrace trace = cg(a, a.apply(draw), Vec(n, 0.0), m);
  Vec e = sub(draw, trace.solution());
  EXPECT_NEAR(res.posterior.beta, 0.5 * dot(e, e), 1e-10 * std::max(1.0, dot(e, e)));
}

TEST(ScaleIdentifiability, ConstraintObservationCarriesNoScale) {
  // with Sigma0 = V V^T + s Psi and W^T A Psi = 0 the law of W^T A x does not
  // depend on s, so the correct Bayes update from that observation is empty;
  // the rescaling-family update still reads off the range(V) coefficients
  Rng rng(9);
  const std::size_t n = 10, m = 3;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 30.0, rng);
  Mat v = random_matrix(n, m, rng);
  Mat w = random_matrix(n, m, rng);
  Mat wta = w.transposed().multiply(a.dense());
  OrthonormalBasis y = nullspace_basis(wta);
  Vec x0 = random_vector(n, rng);
  Vec c = random_vector(m, rng);
  Vec b = a.apply(x0);
  axpy(1.0, a.apply(v.apply(c)), b);  // b = A x0 + A V c

  Vec z = w.apply_transpose(b);
  Vec z_mean = w.apply_transpose(a.apply(x0));
  double ref = 0.0;
  for (double s : {0.1, 1.0, 10.0}) {
    Mat tail = y.columns * std::sqrt(s);
    Mat factor_x = v.hcat(tail);  // factor of V V^T + s Psi
    Mat factor_z = wta.multiply(factor_x);
    DegenerateGaussian gz(z_mean, CovarianceFactor{factor_z});
    const double ll = gaussian_logpdf(gz, z);
    if (ref == 0.0) ref = ll;
    EXPECT_NEAR(ll, ref, 1e-10 * std::abs(ref));
  }

  ProjectionPair pair(a, v, w);
  CalibrationResult res = calibrate_cheap(a, b, x0, pair, ScalePosterior());
  EXPECT_NEAR(res.posterior.beta, 0.5 * dot(c, c), 1e-8 * std::max(1.0, dot(c, c)));
}

TEST(PredictiveStudent, DofAndScale) {
  Rng rng(10);
  CovarianceFactor psi{random_matrix(5, 2, rng)};
  ScalePosterior post(4.0, 6.0);
  DegenerateStudent st = predictive_student(Vec(5, 0.0), psi, post);
  EXPECT_DOUBLE_EQ(st.dof, 8.0);
  // scale covariance = (beta/alpha) Psi
  Mat want = psi.densify() * (6.0 / 4.0);
  EXPECT_LE(testsupport::frobenius_diff(st.scale.densify(), want),
            1e-12 * want.frobenius_norm());
  EXPECT_THROW(predictive_student(Vec(5, 0.0), psi, ScalePosterior(0.0, 0.0)),
               InvalidArgumentError);
}

TEST(PredictiveStudent, GaussianLimit) {
  Rng rng(11);
  CovarianceFactor psi{random_matrix(3, 2, rng)};
  const double c = 1.7;
  const double alpha = 1e6;
  DegenerateStudent st = predictive_student(Vec(3, 0.0), psi, ScalePosterior(alpha, c * alpha));
  DegenerateGaussian g(Vec(3, 0.0), psi.scaled(c));
  for (int trial = 0; trial < 10; ++trial) {
    Vec u = random_vector(2, rng);
    Vec x = psi.factor.apply(u);
    const double ps = std::exp(student_logpdf(st, x));
    const double pg = std::exp(gaussian_logpdf(g, x));
    EXPECT_NEAR(ps, pg, 1e-3 * pg);
  }
}

TEST(PredictiveStudent, MatchesQuadratureMixture) {
  Rng rng(12);
  const std::size_t n = 3;
  CovarianceFactor psi{random_matrix(n, 2, rng)};
  Vec xt = random_vector(n, rng);
  ScalePosterior post(3.0, 2.0);
  DegenerateStudent st = predictive_student(xt, psi, post);
  const int pts = 20000;
  const double lo = std::log(1e-6), hi = std::log(1e6);
  const double step = (hi - lo) / (pts - 1);
  for (int trial = 0; trial < 20; ++trial) {
    Vec u = random_vector(2, rng);
    Vec x = xt;
    axpy(1.0, psi.factor.apply(u), x);
    double mix = 0.0;
    for (int i = 0; i < pts; ++i) {
      const double s = std::exp(lo + i * step);
      DegenerateGaussian gs(xt, psi.scaled(s));
      double w = std::exp(gaussian_logpdf(gs, x)) *
                 ig_pdf(s, post.alpha, post.beta) * s * step;
      if (i == 0 || i + 1 == pts) w *= 0.5;
      mix += w;
    }
    const double want = std::exp(student_logpdf(st, x));
    EXPECT_NEAR(mix, want, 1e-4 * std::max(1.0, want));
  }
}

TEST(SStatisticSamples, MomentsAndScale) {
  CalibrationResult res;
  res.posterior = ScalePosterior(3.0, 4.0);
  EXPECT_DOUBLE_EQ(res.point_scale(), 2.0);

  CalibrationResult unit;
  unit.posterior = ScalePosterior(2.0, 1.0);  // E[s] = 1
  Rng rng(13);
  const std::size_t nm = 35;
  Vec draws = s_statistic_samples(unit, nm, 100000, rng);
  double acc = 0.0;
  for (double d : draws) acc += d;
  EXPECT_NEAR(acc / draws.size(), static_cast<double>(nm), 0.02 * nm);

  CalibrationResult improper;
  improper.posterior = ScalePosterior(1.0, 1.0);  // alpha <= 1: no mean
  EXPECT_THROW(s_statistic_samples(improper, nm, 10, rng), InvalidArgumentError);
}

TEST(SStatisticSamples, HistogramMatchesScaledChi2) {
  CalibrationResult res;
  res.posterior = ScalePosterior(6.0, 10.0);  // E[s] = 2
  const double scale = res.point_scale();
  Rng rng(14);
  const std::size_t nm = 12;
  Vec draws = s_statistic_samples(res, nm, 10000, rng);
  std::vector<double> samples(draws.begin(), draws.end());
  Vec grid = center_grid(0.0, quantile(samples, 0.995), 512);
  DensityEstimate est = kde(samples, grid);
  DensityEstimate law = density_on_grid(
      [&](double x) { return chi2_pdf(x / scale, nm) / scale; }, grid);
  EXPECT_LE(l1_distance(est, law), 0.05);
}

TEST(ReidCovariance, ZeroExtraIterations) {
  Rng rng(15);
  const std::size_t n = 12;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 100.0, rng);
  Vec b = random_vector(n, rng);
  CgTrace trace = cg(a, b, Vec(n, 0.0), 8);
  ReidCovariance rc = reid_covariance(a, trace, 5, 0);
  EXPECT_EQ(rc.rank(), 0u);
  Vec s = reid_sample(rc, rng);
  EXPECT_EQ(norm2(s), 0.0);
}

TEST(ReidCovariance, EnergyMatchesGainSum) {
  Rng rng(16);
  const std::size_t n = 20, m = 5, d = 3;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 200.0, rng);
  Vec b = random_vector(n, rng);
  CgTrace trace = cg(a, b, Vec(n, 0.0), m + d);
  ReidCovariance rc = reid_covariance(a, trace, m, d);
  double want = 0.0;
  for (std::size_t i = m + 1; i <= m + d; ++i) want += trace.gain(i);
  double acc = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    Vec s = reid_sample(rc, rng);
    acc += dot(s, a.apply(s));
  }
  EXPECT_NEAR(acc / draws, want, 0.05 * want);
}

TEST(ReidCovariance, DensifiedRankEqualsD) {
  Rng rng(17);
  const std::size_t n = 20, m = 5, d = 3;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 150.0, rng);
  Vec b = random_vector(n, rng);
  CgTrace trace = cg(a, b, Vec(n, 0.0), m + d);
  ReidCovariance rc = reid_covariance(a, trace, m, d);
  SvdResult svd = jacobi_svd(rc.densify());
  std::size_t rank = 0;
  for (double s : svd.sigma)
    if (s > 1e-10 * svd.sigma.front()) ++rank;
  EXPECT_EQ(rank, d);
  EXPECT_THROW(reid_covariance(a, trace, m, d + 1), InvalidArgumentError);
}

TEST(ReidUnderestimate, TelescopesToEnergyError) {
  Rng rng(18);
  const std::size_t n = 24, m = 6;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 100.0, rng);
  Vec xstar = random_vector(n, rng);
  Vec b = a.apply(xstar);
  CgTrace trace = cg(a, b, Vec(n, 0.0), n);
  ASSERT_GE(trace.iterations(), n - 1);
  const std::size_t total = trace.iterations();
  const double sum_full = reid_underestimate(trace, m, total - m);
  Vec e = sub(xstar, trace.iterate(m));
  const double energy = dot(e, a.apply(e));
  EXPECT_NEAR(sum_full, energy, 1e-6 * energy);

  EXPECT_DOUBLE_EQ(reid_underestimate(trace, m, 0), 0.0);
  double prev = 0.0;
  for (std::size_t d = 1; d + m <= total; ++d) {
    const double cur = reid_underestimate(trace, m, d);
    EXPECT_GE(cur, prev);
    prev = cur;
  }
}

TEST(OpNorm, SingleTermAndTruncation) {
  Vec single{3.0};
  EXPECT_DOUBLE_EQ(op_norm_a_ainv(single), 3.0);
  Vec coeffs{5.0, 2.0, 1.0};
  EXPECT_DOUBLE_EQ(op_norm_truncation_error(coeffs, 1), 2.0);
  EXPECT_DOUBLE_EQ(op_norm_truncation_error(coeffs, 3), 0.0);
  EXPECT_DOUBLE_EQ(op_norm_a_ainv(Vec{}), 0.0);
}

TEST(OpNorm, MatchesGeneralizedEigenOracle) {
  Rng rng(19);
  const std::size_t n = 10, kk = 4;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 60.0, rng);
  Mat u = a_orthonormalize(a, random_matrix(n, kk, rng));
  Vec d(kk);
  for (double& x : d) x = 0.2 + 3.0 * rng.uniform();
  Mat bmat(n, n);
  for (std::size_t j = 0; j < kk; ++j) {
    auto col = u.col(j);
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t p = 0; p < n; ++p) bmat(p, q) += d[j] * col[p] * col[q];
  }
  // oracle: ||B||_{A, A^{-1}}^2 = lambda_max(A^{1/2} B A B A^{1/2})
  Mat ah = testsupport::spd_sqrt(a.dense());
  Mat inner = ah.multiply(bmat).multiply(a.dense()).multiply(bmat).multiply(ah);
  EighResult eig = jacobi_eigh(inner);
  const double oracle = std::sqrt(eig.eigenvalues.back());
  EXPECT_NEAR(op_norm_a_ainv(d), oracle, 1e-8 * oracle);
}
