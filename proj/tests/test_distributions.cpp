#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace projuq;
using testsupport::random_matrix;
using testsupport::random_vector;

namespace {

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

TEST(GaussianSample, RankZeroIsPointMass) {
  DegenerateGaussian g(Vec{1.0, -2.0, 3.0}, CovarianceFactor::zero(3));
  Rng rng(1);
  EXPECT_EQ(gaussian_sample(g, rng), (Vec{1.0, -2.0, 3.0}));
}

TEST(GaussianSample, SampleCovarianceConverges) {
  DegenerateGaussian g(Vec(2, 0.0), CovarianceFactor::identity(2));
  Rng rng(17);
  const int n = 100000;
  double c00 = 0, c01 = 0, c11 = 0;
  for (int i = 0; i < n; ++i) {
    Vec x = gaussian_sample(g, rng);
    c00 += x[0] * x[0];
    c01 += x[0] * x[1];
    c11 += x[1] * x[1];
  }
  EXPECT_NEAR(c00 / n, 1.0, 0.05);
  EXPECT_NEAR(c11 / n, 1.0, 0.05);
  EXPECT_NEAR(c01 / n, 0.0, 0.05);
}

TEST(GaussianSample, StaysOnSupport) {
  Rng rng(3);
  OrthonormalBasis y = orthonormalize(random_matrix(5, 2, rng));
  DegenerateGaussian g(random_vector(5, rng), CovarianceFactor{y.columns});
  for (int i = 0; i < 50; ++i) {
    Vec x = gaussian_sample(g, rng);
    Vec d = sub(x, g.mean);
    Vec off = y.project_complement(d);
    EXPECT_LE(norm2(off), 1e-12 * std::max(1.0, norm2(d)));
  }
}

TEST(GaussianSample, CovarianceErrorShrinksWithN) {
  Rng rng(29);
  Mat x = random_matrix(4, 3, rng);
  CovarianceFactor cov{x};
  Mat sigma = cov.densify();
  DegenerateGaussian g(Vec(4, 0.0), cov);
  auto frob_err = [&](int n) {
    Mat acc(4, 4);
    for (int i = 0; i < n; ++i) {
      Vec s = gaussian_sample(g, rng);
      for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t q = 0; q < 4; ++q) acc(p, q) += s[p] * s[q];
    }
    return testsupport::frobenius_diff(acc * (1.0 / n), sigma);
  };
  const double e3 = frob_err(1000);
  const double e4 = frob_err(10000);
  const double e5 = frob_err(100000);
  EXPECT_GT(e3, e4);
  EXPECT_GT(e4, e5);
}

TEST(GaussianLogpdf, StandardNormalMode) {
  DegenerateGaussian g(Vec{0.0}, CovarianceFactor::identity(1));
  EXPECT_NEAR(gaussian_logpdf(g, Vec{0.0}), -0.5 * std::log(2.0 * std::numbers::pi), 1e-14);
}

TEST(GaussianLogpdf, MatchesDenseFormulaFullRank) {
  Rng rng(31);
  MatrixHandle sigma_h = testsupport::random_spd_with_condition(4, 30.0, rng);
  const Mat& sigma = sigma_h.dense();
  Mat l = cholesky(sigma);
  CovarianceFactor cov{l};
  Vec mu = random_vector(4, rng);
  DegenerateGaussian g(mu, cov);
  LuFactor lu(sigma);
  for (int trial = 0; trial < 10; ++trial) {
    Vec x = random_vector(4, rng);
    Vec d = sub(x, mu);
    const double quad = dot(d, lu.solve(d));
    const double want =
        -0.5 * quad - 0.5 * (4.0 * std::log(2.0 * std::numbers::pi) + lu.log_abs_det());
    EXPECT_NEAR(gaussian_logpdf(g, x), want, 1e-10 * std::abs(want));
  }
}

TEST(GaussianLogpdf, OffSupportRejected) {
  Mat f(3, 1);
  f(0, 0) = 2.0;
  DegenerateGaussian g(Vec(3, 0.0), CovarianceFactor{f});
  EXPECT_THROW(gaussian_logpdf(g, Vec{0.0, 1.0, 0.0}), OutOfRangeError);
  EXPECT_NO_THROW(gaussian_logpdf(g, Vec{1.0, 0.0, 0.0}));
}

TEST(StudentSample, LargeDofMatchesGaussian) {
  Rng rng(5);
  DegenerateStudent t(Vec(2, 0.0), CovarianceFactor::identity(2), 1e6);
  const int n = 100000;
  double c00 = 0, c11 = 0;
  for (int i = 0; i < n; ++i) {
    Vec x = student_sample(t, rng);
    c00 += x[0] * x[0];
    c11 += x[1] * x[1];
  }
  EXPECT_NEAR(c00 / n, 1.0, 0.05);
  EXPECT_NEAR(c11 / n, 1.0, 0.05);
}

TEST(StudentSample, RankZeroIsPointMass) {
  DegenerateStudent t(Vec{2.0, 1.0}, CovarianceFactor::zero(2), 4.0);
  Rng rng(6);
  EXPECT_EQ(student_sample(t, rng), (Vec{2.0, 1.0}));
}

TEST(StudentSample, VarianceMatchesMoment) {
  // var of t_nu is nu / (nu - 2)
  DegenerateStudent t(Vec{0.0}, CovarianceFactor::identity(1), 4.0);
  Rng rng(77);
  const int n = 100000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec x = student_sample(t, rng);
    acc += x[0] * x[0];
  }
  EXPECT_NEAR(acc / n, 2.0, 0.2);
}

TEST(DensityFunctions, Chi2AtKnownPoint) {
  EXPECT_NEAR(chi2_pdf(2.0, 2.0), std::exp(-1.0) / 2.0, 1e-15);
}

TEST(DensityFunctions, FModeMatchesGridSearch) {
  const double d1 = 7.0, d2 = 9.0;
  double best_x = 0.0, best_v = -1.0;
  for (int i = 1; i < 20000; ++i) {
    const double x = i * 1e-4;
    const double v = f_pdf(x, d1, d2);
    if (v > best_v) {
      best_v = v;
      best_x = x;
    }
  }
  const double mode = (d1 - 2.0) / d1 * d2 / (d2 + 2.0);
  EXPECT_NEAR(best_x, mode, 2e-4);
}

TEST(DensityFunctions, IgIntegratesToOne) {
  const double alpha = 3.0, beta = 2.0;
  const int pts = 200000;
  const double lo = std::log(1e-8), hi = std::log(1e8);
  const double step = (hi - lo) / (pts - 1);
  double mass = 0.0;
  for (int i = 0; i < pts; ++i) {
    const double s = std::exp(lo + i * step);
    double w = ig_pdf(s, alpha, beta) * s * step;
    if (i == 0 || i + 1 == pts) w *= 0.5;
    mass += w;
  }
  EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(DensityFunctions, CdfsMatchQuadrature) {
  const int pts = 400000;
  auto integrate = [&](auto pdf, double hi) {
    double acc = 0.0;
    const double step = hi / pts;
    for (int i = 0; i < pts; ++i) acc += pdf((i + 0.5) * step) * step;
    return acc;
  };
  EXPECT_NEAR(integrate([](double x) { return chi2_pdf(x, 5.0); }, 7.0), chi2_cdf(7.0, 5.0),
              1e-8);
  EXPECT_NEAR(integrate([](double x) { return f_pdf(x, 6.0, 11.0); }, 1.3),
              f_cdf(1.3, 6.0, 11.0), 1e-8);
}

TEST(MixtureIdentity, GaussianIgEqualsStudent) {
  // integrate N(x | mu, s Sigma) IG(s | alpha, beta) over s on a log grid and
  // compare with the Student density St_{2 alpha}(x | mu, (beta/alpha) Sigma)
  Rng rng(41);
  const double alpha = 2.5, beta = 1.7;
  Mat f = random_matrix(3, 2, rng);
  Vec mu = random_vector(3, rng);
  DegenerateStudent st(mu, CovarianceFactor{f}.scaled(beta / alpha), 2.0 * alpha);
  const int pts = 20000;
  const double lo = std::log(1e-6), hi = std::log(1e6);
  const double step = (hi - lo) / (pts - 1);
  for (int trial = 0; trial < 20; ++trial) {
    Vec c = random_vector(2, rng);
    Vec x = mu;
    axpy(1.0, f.apply(c), x);
    double mix = 0.0;
    for (int i = 0; i < pts; ++i) {
      const double s = std::exp(lo + i * step);
      DegenerateGaussian gs(mu, CovarianceFactor{f}.scaled(s));
      double w = std::exp(gaussian_logpdf(gs, x)) * ig_pdf(s, alpha, beta) * s * step;
      if (i == 0 || i + 1 == pts) w *= 0.5;
      mix += w;
    }
    const double want = std::exp(student_logpdf(st, x));
    EXPECT_NEAR(mix, want, 1e-4 * std::max(1.0, want));
  }
}

TEST(Kde, TwoSymmetricSamples) {
  Vec grid = center_grid(-3.0, 3.0, 600);
  DensityEstimate est = kde({-1.0, 1.0}, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t mirror = grid.size() - 1 - i;
    EXPECT_NEAR(est.values[i], est.values[mirror], 1e-12);
  }
}

TEST(Kde, ConsistentForStandardNormal) {
  Rng rng(8);
  std::vector<double> samples(100000);
  for (double& s : samples) s = rng.gaussian();
  Vec grid = center_grid(-6.0, 6.0, 512);
  DensityEstimate est = kde(samples, grid);
  DensityEstimate exact = density_on_grid([](double x) { return normal_pdf(x, 0, 1); }, grid);
  EXPECT_LE(l1_distance(est, exact), 0.05);
}

TEST(Kde, MassNearOne) {
  Rng rng(9);
  std::vector<double> samples(1000);
  for (double& s : samples) s = 2.0 + 0.7 * rng.gaussian();
  Vec grid = center_grid(2.0 - 6.0 * 0.7, 2.0 + 6.0 * 0.7, 800);
  DensityEstimate est = kde(samples, grid);
  EXPECT_GE(est.mass(), 0.98);
  EXPECT_LE(est.mass(), 1.02);
}

TEST(Kde, DegenerateSamplesRejected) {
  Vec grid = center_grid(0.0, 1.0, 16);
  EXPECT_THROW(kde({0.5, 0.5, 0.5}, grid), DegenerateSampleError);
}

TEST(L1Distance, IdenticalDensitiesGiveZero) {
  Vec grid = center_grid(0.0, 1.0, 64);
  DensityEstimate p = density_on_grid([](double) { return 1.0; }, grid);
  EXPECT_DOUBLE_EQ(l1_distance(p, p), 0.0);
}

TEST(L1Distance, DisjointSupportsNearTwo) {
  Vec grid = center_grid(-8.0, 8.0, 2048);
  DensityEstimate p = density_on_grid([](double x) { return normal_pdf(x, -4, 0.3); }, grid);
  DensityEstimate q = density_on_grid([](double x) { return normal_pdf(x, 4, 0.3); }, grid);
  EXPECT_NEAR(l1_distance(p, q), 2.0, 1e-3);
}

TEST(L1Distance, ShiftedNormalsMatchOverlapFormula) {
  Vec grid = center_grid(-10.0, 10.5, 40000);
  DensityEstimate p = density_on_grid([](double x) { return normal_pdf(x, 0.0, 1.0); }, grid);
  DensityEstimate q = density_on_grid([](double x) { return normal_pdf(x, 0.5, 1.0); }, grid);
  const double want = 2.0 * (2.0 * normal_cdf(0.25) - 1.0);
  EXPECT_NEAR(l1_distance(p, q), want, 1e-3);
}

TEST(L1Distance, GridMismatchRejected) {
  DensityEstimate p{center_grid(0, 1, 8), Vec(8, 1.0)};
  DensityEstimate q{center_grid(0, 2, 8), Vec(8, 1.0)};
  EXPECT_THROW(l1_distance(p, q), InvalidArgumentError);
}

TEST(ScalePosteriorType, ImproperAllowedAndFlagged) {
  ScalePosterior improper;
  EXPECT_FALSE(improper.proper());
  ScalePosterior proper(3.0, 4.0);
  EXPECT_TRUE(proper.proper());
  EXPECT_DOUBLE_EQ(proper.mean(), 2.0);
  EXPECT_THROW(ScalePosterior(-1.0, 0.0), InvalidArgumentError);
  EXPECT_THROW(improper.mean(), InvalidArgumentError);
}

TEST(KsStatistic, UniformSamplesSmall) {
  Rng rng(10);
  std::vector<double> samples(20000);
  for (double& s : samples) s = rng.uniform();
  const double ks = ks_statistic(samples, [](double x) { return std::clamp(x, 0.0, 1.0); });
  EXPECT_LE(ks, 0.015);
}
