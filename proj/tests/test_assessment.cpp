#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace projuq;
using testsupport::random_matrix;
using testsupport::random_vector;

TEST(ZStatistic, ProjectorCovarianceIsSquaredNorm) {
  Rng rng(1);
  const std::size_t n = 9, m = 3;
  MatrixHandle a = testsupport::random_spd_with_condition(n, 30.0, rng);
  Mat w = random_matrix(n, m, rng);
  Mat wta = w.transposed().multiply(a.dense());
  OrthonormalBasis y = nullspace_basis(wta);
  CovarianceFactor p2{y.columns};
  Vec c = random_vector(n - m, rng);
  Vec e = y.columns.apply(c);
  Vec xm = random_vector(n, rng);
  Vec xstar = add(xm, e);
  EXPECT_NEAR(z_statistic(xstar, xm, p2, false), dot(e, e), 1e-10 * dot(e, e));
  EXPECT_NEAR(z_statistic(xstar, xm, p2, true), dot(e, e) / (n - m),
              1e-10 * dot(e, e) / (n - m));
}

TEST(ZStatistic, ZeroErrorGivesZero) {
  Rng rng(2);
  CovarianceFactor cov{random_matrix(5, 2, rng)};
  Vec xm = random_vector(5, rng);
  EXPECT_DOUBLE_EQ(z_statistic(xm, xm, cov, false), 0.0);
}

TEST(ZStatistic, MatchesDensePseudoInverseOracle) {
  Rng rng(3);
  const std::size_t n = 6;
  Mat f = random_matrix(n, 2, rng);
  CovarianceFactor cov{f};
  Vec c = random_vector(2, rng);
  Vec e = f.apply(c);
  Vec xm = random_vector(n, rng);
  Vec xstar = add(xm, e);
  const double want = testsupport::dense_pseudo_quadform(cov.densify(), e);
  EXPECT_NEAR(z_statistic(xstar, xm, cov, false), want, 1e-9 * std::max(1.0, want));
}

TEST(ZStatistic, OutOfRangeReportedDistinctly) {
  Mat f(3, 1);
  f(0, 0) = 1.0;
  CovarianceFactor cov{f};
  Vec xm(3, 0.0);
  Vec xstar{0.0, 1.0, 0.0};
  EXPECT_THROW(z_statistic(xstar, xm, cov, false), OutOfRangeError);
  ClampedStatistic st = z_statistic_clamped(xstar, xm, cov, false);
  EXPECT_TRUE(st.clamped);
  EXPECT_NEAR(st.leak, 1.0, 1e-14);
  EXPECT_NEAR(st.value, 0.0, 1e-14);
}

TEST(Discrepancy, SmallForSamplesFromTarget) {
  Rng rng(4);
  StatisticSeries series;
  series.target = StatTarget::chi2(10.0);
  series.samples.resize(10000);
  for (double& s : series.samples) s = rng.chi_squared(10.0);
  EXPECT_LE(discrepancy(series), 0.08);
}

TEST(Discrepancy, LargeForMismatchedTarget) {
  Rng rng(5);
  StatisticSeries series;
  series.target = StatTarget::chi2(50.0);
  series.samples.resize(10000);
  for (double& s : series.samples) s = rng.chi_squared(5.0);
  EXPECT_GE(discrepancy(series), 1.0);
}

TEST(Discrepancy, NeedsEnoughSamples) {
  StatisticSeries series;
  series.target = StatTarget::chi2(5.0);
  series.samples = {1.0, 2.0, 3.0};
  EXPECT_THROW(discrepancy(series), InvalidArgumentError);
}

TEST(RunAssessment, PriorConsistentOracleIsCalibrated) {
  // the well-specified case: solutions drawn from the structured prior give a
  // chi-squared statistic; discrepancy stays small for every m
  for (std::size_t m : {5ul, 10ul, 20ul}) {
    AssessmentSpec spec;
    spec.n = 50;
    spec.m = m;
    spec.matrices = 40;
    spec.samples_per_matrix = 25;  // M N = 1000
    spec.sampling = SolutionSampling::prior_consistent;
    spec.master_seed = 77;
    StatisticSeries series = run_assessment(spec);
    EXPECT_EQ(series.samples.size(), 1000u);
    EXPECT_LE(discrepancy(series), 0.15) << "m = " << m;
  }
}

TEST(RunAssessment, FullProjectionDegenerates) {
  AssessmentSpec spec;
  spec.n = 12;
  spec.m = 12;
  spec.matrices = 1;
  spec.samples_per_matrix = 3;
  spec.prior_mode = PriorMode::trivial;
  StatisticSeries series = run_assessment(spec);
  for (double s : series.samples) EXPECT_EQ(s, 0.0);
}

TEST(RunAssessment, HierarchicalTargetDofs) {
  AssessmentSpec cheap;
  cheap.n = 30;
  cheap.m = 6;
  cheap.matrices = 2;
  cheap.samples_per_matrix = 2;
  cheap.prior_mode = PriorMode::cheap;
  cheap.regime = StatisticRegime::hierarchical;
  StatisticSeries s1 = run_assessment(cheap);
  EXPECT_EQ(s1.target.family, StatTarget::Family::f);
  EXPECT_DOUBLE_EQ(s1.target.d1, 24.0);
  EXPECT_DOUBLE_EQ(s1.target.d2, 6.0);  // F(n - m, m) for alpha = 0

  AssessmentSpec expensive = cheap;
  expensive.prior_mode = PriorMode::expensive;
  expensive.observations = 2;
  StatisticSeries s2 = run_assessment(expensive);
  EXPECT_DOUBLE_EQ(s2.target.d2, 48.0);  // F(n - m, k (n - m))
}

TEST(RunAssessment, DeterministicUnderFixedSeed) {
  AssessmentSpec spec;
  spec.n = 20;
  spec.m = 4;
  spec.matrices = 5;
  spec.samples_per_matrix = 3;
  spec.prior_mode = PriorMode::expensive;
  spec.master_seed = 99;
  StatisticSeries s1 = run_assessment(spec);
  StatisticSeries s2 = run_assessment(spec);
  ASSERT_EQ(s1.samples.size(), s2.samples.size());
  for (std::size_t i = 0; i < s1.samples.size(); ++i)
    EXPECT_EQ(s1.samples[i], s2.samples[i]);
}

TEST(RunAssessment, ThreadedRunMatchesSerial) {
  AssessmentSpec spec;
  spec.n = 20;
  spec.m = 4;
  spec.matrices = 6;
  spec.samples_per_matrix = 2;
  spec.prior_mode = PriorMode::cheap;
  spec.master_seed = 5;
  StatisticSeries serial = run_assessment(spec);
  spec.threads = 3;
  StatisticSeries threaded = run_assessment(spec);
  ASSERT_EQ(serial.samples.size(), threaded.samples.size());
  for (std::size_t i = 0; i < serial.samples.size(); ++i)
    EXPECT_EQ(serial.samples[i], threaded.samples[i]);
}

TEST(RunAssessment, BaselinePriorGatedBySize) {
  AssessmentSpec spec;
  spec.n = 600;
  spec.m = 10;
  spec.prior_mode = PriorMode::a_inverse;
  EXPECT_THROW(spec.validate(), InvalidArgumentError);
}

TEST(RunAssessment, BaselineModesRun) {
  for (PriorMode mode : {PriorMode::a_inverse, PriorMode::ata_inverse}) {
    AssessmentSpec spec;
    spec.n = 16;
    spec.m = 4;
    spec.matrices = 3;
    spec.samples_per_matrix = 2;
    spec.prior_mode = mode;
    spec.master_seed = 3;
    StatisticSeries series = run_assessment(spec);
    EXPECT_EQ(series.samples.size(), 6u);
    for (double s : series.samples) EXPECT_GE(s, 0.0);
  }
}
