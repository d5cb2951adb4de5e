#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shapdec/shapdec.hpp"

using namespace shapdec;

namespace {

GaussianModel bivariate(double alpha) {
  GaussianModel g;
  g.mean = Vector::Zero(2);
  g.cov = (Matrix(2, 2) << 1.0, alpha, alpha, 1.0).finished();
  return g;
}

FeatureMatrix gaussian_data(const GaussianModel& g, std::size_t n, std::uint64_t seed) {
  GaussianSampler s(g);
  RngStream rng(seed, 0);
  const Matrix draws = s.sample(Coalition(static_cast<std::size_t>(g.mean.size())), g.mean, n, rng);
  return FeatureMatrix(default_names(static_cast<std::size_t>(g.mean.size())), draws);
}

}  // namespace

TEST(FitGaussian, TwoPointSample) {
  const auto g = fit_gaussian(FeatureMatrix({"a", "b"}, (Matrix(2, 2) << 0, 0, 2, 2).finished()));
  EXPECT_EQ(g.mean, (Vector(2) << 1, 1).finished());
  EXPECT_TRUE(g.cov.isApprox((Matrix(2, 2) << 2, 2, 2, 2).finished(), 1e-15));
  EXPECT_TRUE(g.constant_features.empty());
}

TEST(FitGaussian, ConstantRowsGiveZeroCovariance) {
  Matrix rows(5, 3);
  rows.rowwise() = Eigen::RowVector3d(1, 2, 3);
  const auto g = fit_gaussian(FeatureMatrix({"a", "b", "c"}, rows));
  EXPECT_EQ(g.cov, Matrix::Zero(3, 3));
  EXPECT_EQ(g.constant_features, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(FitGaussian, RecoversCorrelation) {
  const auto g = fit_gaussian(gaussian_data(bivariate(0.5), 100000, 3));
  EXPECT_NEAR(g.cov(0, 1) / std::sqrt(g.cov(0, 0) * g.cov(1, 1)), 0.5, 0.02);
  EXPECT_NEAR(g.mean[0], 0.0, 0.02);
}

TEST(ConditionGaussian, Bivariate) {
  const auto c = condition_gaussian(bivariate(0.5), Coalition::from_indices(2, {0}), (Vector(2) << 1, 99).finished());
  ASSERT_EQ(c.cond_mean.size(), 1);
  EXPECT_NEAR(c.cond_mean[0], 0.5, 1e-14);
  EXPECT_NEAR(c.cond_cov(0, 0), 0.75, 1e-14);
  EXPECT_EQ(c.targets.members(), std::vector<std::size_t>{1});
}

TEST(ConditionGaussian, EmptyConditioningIsMarginal) {
  GaussianModel g;
  g.mean = (Vector(3) << 1, 2, 3).finished();
  g.cov = (Matrix(3, 3) << 2, 0.3, 0.1, 0.3, 1, 0.2, 0.1, 0.2, 1.5).finished();
  const auto c = condition_gaussian(g, Coalition(3), Vector::Zero(3));
  EXPECT_TRUE(c.cond_mean.isApprox(g.mean));
  EXPECT_TRUE(c.cond_cov.isApprox(g.cov));
}

TEST(ConditionGaussian, IndependentIsUnaffected) {
  GaussianModel g;
  g.mean = (Vector(3) << 1, 2, 3).finished();
  g.cov = Matrix::Identity(3, 3);
  const auto c = condition_gaussian(g, Coalition::from_indices(3, {1}), (Vector(3) << 5, 5, 5).finished());
  EXPECT_TRUE(c.cond_mean.isApprox((Vector(2) << 1, 3).finished()));
  EXPECT_TRUE(c.cond_cov.isApprox(Matrix::Identity(2, 2)));
}

TEST(ConditionGaussian, MatchesSchurComplement) {
  // Oracle: direct block formulas with a full inverse.
  GaussianModel g;
  g.mean = (Vector(4) << 0.5, -1, 2, 0).finished();
  Matrix l = Matrix::Random(4, 4);
  g.cov = l * l.transpose() + Matrix::Identity(4, 4);
  const Vector x = (Vector(4) << 1, 2, 3, 4).finished();
  const std::vector<std::size_t> s = {0, 2}, r = {1, 3};
  const auto c = condition_gaussian(g, Coalition::from_indices(4, s), x);
  const Matrix srr = linalg::select(g.cov, r, r), srs = linalg::select(g.cov, r, s), sss = linalg::select(g.cov, s, s);
  const Vector expect_mean =
      linalg::select(g.mean, r) + srs * sss.inverse() * (linalg::select(x, s) - linalg::select(g.mean, s));
  const Matrix expect_cov = srr - srs * sss.inverse() * srs.transpose();
  EXPECT_TRUE(c.cond_mean.isApprox(expect_mean, 1e-12));
  EXPECT_TRUE(c.cond_cov.isApprox(expect_cov, 1e-12));
}

TEST(ConditionGaussian, CollinearFeaturesUseJitter) {
  // x1 = x0 exactly: Σ_SS singular for S = {0, 1}.
  GaussianModel g;
  g.mean = Vector::Zero(3);
  g.cov = (Matrix(3, 3) << 1, 1, 0.5, 1, 1, 0.5, 0.5, 0.5, 1).finished();
  const auto c = condition_gaussian(g, Coalition::from_indices(3, {0, 1}), (Vector(3) << 1, 1, 0).finished());
  EXPECT_TRUE(c.cond_mean.allFinite());
  EXPECT_NEAR(c.cond_mean[0], 0.5, 1e-6);
}

TEST(ConditionGaussian, UnsolvableRaisesSingularity) {
  GaussianModel g;
  g.mean = Vector::Zero(2);
  g.cov = Matrix::Zero(2, 2);
  g.cov(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(GaussianSampler{g}, IngestionError);
  g.cov = (Matrix(2, 2) << -1, 0, 0, 1).finished();
  try {
    condition_gaussian(g, Coalition::from_indices(2, {0}), Vector::Zero(2));
    FAIL() << "expected a singularity error";
  } catch (const SingularityError& e) {
    EXPECT_NE(std::string(e.what()).find("x0"), std::string::npos);
  }
}

TEST(GaussianSampler, ConditionalDrawMoments) {
  GaussianSampler s(bivariate(0.5));
  RngStream rng(1, 0);
  const Matrix d = s.sample(Coalition::from_indices(2, {0}), (Vector(2) << 1, 0).finished(), 100000, rng);
  ASSERT_EQ(d.cols(), 1);
  const double mean = d.col(0).mean();
  const double var = (d.col(0).array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.5, 0.01);
  EXPECT_NEAR(var, 0.75, 0.01);
}

TEST(GaussianSampler, IndependentConditionalEqualsMarginal) {
  GaussianSampler s(bivariate(0.0));
  RngStream a(2, 0), b(2, 1);
  const Matrix cond = s.sample(Coalition::from_indices(2, {0}), (Vector(2) << 3, 0).finished(), 100000, a);
  const Matrix marg = s.sample(Coalition(2), Vector::Zero(2), 100000, b);
  const double mc = cond.col(0).mean(), mm = marg.col(1).mean();
  EXPECT_NEAR(mc, mm, 0.02);
  EXPECT_NEAR((cond.col(0).array() - mc).square().mean(), (marg.col(1).array() - mm).square().mean(), 0.02);
}

TEST(GaussianSampler, ConditionalMeanClosedForm) {
  GaussianSampler s(bivariate(0.5));
  RngStream rng;
  const Vector m = s.conditional_mean(Coalition::from_indices(2, {0}), (Vector(2) << 1, 0).finished(), rng);
  EXPECT_NEAR(m[0], 0.5, 1e-14);
  GaussianModel g = bivariate(0.5);
  g.mean << 2, -1;
  EXPECT_TRUE(GaussianSampler(g).conditional_mean(Coalition(2), Vector::Zero(2), rng).isApprox(g.mean));
}

TEST(GaussianSampler, ChecksArguments) {
  GaussianSampler s(bivariate(0.5));
  RngStream rng;
  EXPECT_THROW(s.sample(Coalition(3), Vector::Zero(3), 1, rng), SizeError);
  EXPECT_THROW(s.sample(Coalition(2), Vector::Zero(3), 1, rng), SizeError);
  EXPECT_THROW(sample_conditional(s, Coalition(2), Vector::Zero(2), 0, rng), SizeError);
}

TEST(EmpiricalMarginal, InverseCdfStaysInRange) {
  EmpiricalMarginal m({3.0, 1.0, 2.0, 2.0, 5.0});
  EXPECT_EQ(m.min(), 1.0);
  EXPECT_EQ(m.max(), 5.0);
  EXPECT_EQ(m.quantile(0.0), 1.0);
  EXPECT_EQ(m.quantile(1.0), 5.0);
  for (double v : {1.0, 1.5, 2.0, 3.0, 4.2, 5.0}) EXPECT_NEAR(m.quantile(m.cdf(v)), v, 1e-12);
  EXPECT_EQ(m.cdf(-10.0), m.cdf(1.0));
}

TEST(CopulaSampler, DrawsWithinObservedRange) {
  RngStream gen(4, 0);
  Matrix rows(500, 2);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double u = gen.uniform();
    rows(r, 0) = u;
    rows(r, 1) = std::exp(2.0 * u + 0.3 * gen.normal());
  }
  const FeatureMatrix data({"u", "v"}, rows);
  CopulaSampler s(fit_copula(data));
  EXPECT_GT(s.model().correlation(0, 1), 0.8);
  RngStream rng(4, 1);
  const Matrix d = s.sample(Coalition::from_indices(2, {1}), (Vector(2) << 0, 3.0).finished(), 20000, rng);
  EXPECT_GE(d.minCoeff(), rows.col(0).minCoeff());
  EXPECT_LE(d.maxCoeff(), rows.col(0).maxCoeff());
  const Matrix all = s.sample(Coalition(2), Vector::Zero(2), 20000, rng);
  EXPECT_GE(all.col(1).minCoeff(), rows.col(1).minCoeff());
  EXPECT_LE(all.col(1).maxCoeff(), rows.col(1).maxCoeff());
}

TEST(CopulaSampler, DegenerateMarginalRaises) {
  Matrix rows(10, 2);
  for (Eigen::Index r = 0; r < 10; ++r) rows.row(r) << static_cast<double>(r), 1.0;
  CopulaSampler s(fit_copula(FeatureMatrix({"a", "b"}, rows)));
  RngStream rng;
  EXPECT_THROW(s.sample(Coalition::from_indices(2, {1}), (Vector(2) << 0, 1).finished(), 5, rng),
               DegenerateMarginalError);
}

TEST(DiscreteSampler, ToyConditionalFrequency) {
  DiscreteSampler s(experiments::toy_joint());
  RngStream rng(6, 0);
  const Matrix d = s.sample(Coalition::from_indices(2, {1}), (Vector(2) << 0, 1).finished(), 100000, rng);
  EXPECT_NEAR(d.col(0).mean(), 0.7, 0.01);
  RngStream r2(6, 1);
  s.set_mean_draws(100000);
  EXPECT_NEAR(s.conditional_mean(Coalition::from_indices(2, {1}), (Vector(2) << 0, 1).finished(), r2)[0], 0.7, 0.01);
}

TEST(DiscreteSampler, NoMatchingSupportRaises) {
  DiscreteSampler s(DiscreteJoint({(Vector(2) << 0, 0).finished(), (Vector(2) << 1, 1).finished()}, {0.5, 0.5}));
  RngStream rng;
  EXPECT_THROW(s.sample(Coalition::from_indices(2, {0}), (Vector(2) << 2, 0).finished(), 1, rng), ConditioningError);
}

TEST(DiscreteJoint, Validation) {
  const Vector a = (Vector(1) << 0).finished(), b = (Vector(1) << 1).finished();
  EXPECT_THROW(DiscreteJoint({a, b}, {0.5, 0.6}), IngestionError);
  EXPECT_THROW(DiscreteJoint({a, a}, {0.5, 0.5}), IngestionError);
  EXPECT_THROW(DiscreteJoint({a, b}, {1.0}), SizeError);
  EXPECT_NO_THROW(DiscreteJoint({a, b}, {0.25, 0.75}));
}

TEST(FitDiscrete, EmpiricalPmf) {
  const auto j = fit_discrete(experiments::toy_data());
  ASSERT_EQ(j.support.size(), 4u);
  EXPECT_NEAR(j.probs[0], 0.35, 1e-15);
  EXPECT_NEAR(j.probs[1], 0.15, 1e-15);
}

TEST(MarginalRows, SingleRowData) {
  Matrix one(2, 2);
  one << 1, 2, 1, 2;
  RngStream rng;
  const Matrix d = sample_marginal_rows(FeatureMatrix({"a", "b"}, one), 50, rng);
  for (Eigen::Index r = 0; r < d.rows(); ++r) EXPECT_EQ(d.row(r), one.row(0));
}

TEST(MarginalRows, UniformOverRows) {
  const auto data = experiments::generate_housing(506, 1).features;
  // Tag rows by their index so each draw can be traced back.
  Matrix tagged(506, 1);
  for (Eigen::Index r = 0; r < 506; ++r) tagged(r, 0) = static_cast<double>(r);
  const FeatureMatrix idx({"row"}, tagged);
  RngStream rng(8, 0);
  const Matrix d = sample_marginal_rows(idx, 100000, rng);
  std::vector<double> counts(506, 0.0);
  for (Eigen::Index r = 0; r < d.rows(); ++r) counts[static_cast<std::size_t>(d(r, 0))] += 1.0;
  const double p = 1.0 / 506.0, mean = 100000 * p, sd = std::sqrt(100000 * p * (1 - p));
  int outside = 0;
  for (double c : counts) outside += std::fabs(c - mean) > 3.0 * sd;
  // About 0.27% of rows fall outside 3σ by chance.
  EXPECT_LE(outside, 6);
  (void)data;
}

TEST(MarginalRows, PreserveJointPairs) {
  Matrix rows(4, 2);
  rows << 0, 10, 1, 11, 2, 12, 3, 13;
  RngStream rng(9, 0);
  const Matrix d = sample_marginal_rows(FeatureMatrix({"a", "b"}, rows), 1000, rng);
  for (Eigen::Index r = 0; r < d.rows(); ++r) EXPECT_EQ(d(r, 1), d(r, 0) + 10);
}

TEST(MarginalSampler, IgnoresKnownValues) {
  Matrix rows(4, 2);
  rows << 0, 10, 1, 11, 2, 12, 3, 13;
  MarginalSampler s(FeatureMatrix({"a", "b"}, rows));
  RngStream r1(1, 1), r2(1, 1);
  EXPECT_EQ(s.sample(Coalition::from_indices(2, {0}), (Vector(2) << 0, 0).finished(), 10, r1),
            s.sample(Coalition::from_indices(2, {0}), (Vector(2) << 3, 0).finished(), 10, r2));
  EXPECT_NEAR(s.conditional_mean(Coalition::from_indices(2, {0}), Vector::Zero(2), r1)[0], 11.5, 1e-12);
}

TEST(SamplerJson, RoundTrips) {
  const auto data = experiments::generate_fire(60, 2).features;
  for (const std::string kind : {"gaussian", "copula", "marginal"}) {
    const auto s = fit_sampler(kind, data);
    const auto back = sampler_from_json(s->to_json());
    EXPECT_EQ(back->kind(), kind);
    EXPECT_EQ(back->names(), data.names());
    const Sample x = data.row(3);
    const auto known = Coalition::from_indices(4, {0, 2});
    RngStream a(1, 2), b(1, 2);
    EXPECT_TRUE(s->sample(known, x, 20, a).isApprox(back->sample(known, x, 20, b), 1e-12)) << kind;
  }
  const auto disc = fit_sampler("discrete", experiments::toy_data());
  EXPECT_EQ(sampler_from_json(disc->to_json())->to_json(), disc->to_json());
  EXPECT_THROW(sampler_from_json(nlohmann::json{{"kind", "vine"}}), IngestionError);
  EXPECT_THROW(sampler_from_json(nlohmann::json{{"kind", "gaussian"}}), IngestionError);
  EXPECT_THROW(fit_sampler("vine", data), UnsupportedError);
}
