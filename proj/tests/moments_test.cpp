#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "minar/moments.hpp"
#include "test_support.hpp"

using namespace minar;

namespace {

const ThinningMatrix kDaily{{0.0817, 0.028}, {0.106, 0.1552}};
const BivPoissonParams kDailyInnov{0.1620, 0.4261, 0.0269};

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::MatrixXd residual(const ThinningMatrix& P, const Eigen::VectorXd& mu, const Eigen::MatrixXd& g,
                         const Eigen::MatrixXd& Lambda) {
  const Eigen::MatrixXd delta = (P.bernoulli_variances() * mu).asDiagonal();
  return g - P.matrix() * g * P.matrix().transpose() - delta - Lambda;
}

}  // namespace

TEST(StationaryMean, ZeroMatrixGivesInnovationMean) {
  const auto mu = stationary_mean(ThinningMatrix::zeros(2), vec2(5, 3));
  EXPECT_EQ(mu, vec2(5, 3));
}

TEST(StationaryMean, DailyTableValues) {
  const auto mu = stationary_mean(kDaily, vec2(kDailyInnov.lambda1, kDailyInnov.lambda2));
  EXPECT_NEAR(mu(0), 0.1926, 0.0002);
  EXPECT_NEAR(mu(1), 0.5285, 0.0002);
}

TEST(StationaryMean, BivariateClosedForm) {
  const double p11 = 0.25, p12 = 0.05, p21 = 0.1, p22 = 0.4, l1 = 5, l2 = 3;
  const double det = (1 - p11) * (1 - p22) - p12 * p21;
  const auto mu = stationary_mean(ThinningMatrix{{p11, p12}, {p21, p22}}, vec2(l1, l2));
  EXPECT_NEAR(mu(0), ((1 - p22) * l1 + p12 * l2) / det, 1e-13);
  EXPECT_NEAR(mu(1), ((1 - p11) * l2 + p21 * l1) / det, 1e-13);
}

TEST(StationaryMean, RejectsNonstationary) {
  EXPECT_THROW(stationary_mean(ThinningMatrix{{1, 1}, {1, 1}}, vec2(1, 1)), StationarityError);
  EXPECT_THROW(stationary_mean(ThinningMatrix{{1.0}}, Eigen::VectorXd::Ones(1)), StationarityError);
  EXPECT_THROW(stationary_mean(kDaily, Eigen::VectorXd::Ones(3)), DimensionError);
}

TEST(StationaryCov, ScalarPoissonMarginal) {
  const auto m = stationary_cov(ThinningMatrix{{0.5}}, Eigen::VectorXd::Constant(1, 2.0),
                                Eigen::MatrixXd::Constant(1, 1, 2.0));
  EXPECT_NEAR(m.mu(0), 4.0, 1e-12);
  EXPECT_NEAR(m.gamma0(0, 0), 4.0, 1e-11);
  EXPECT_TRUE(m.converged);
}

TEST(StationaryCov, ZeroMatrixGivesInnovationCov) {
  const auto m = stationary_cov(ThinningMatrix::zeros(2), BivPoissonParams{5, 3, 1});
  EXPECT_NEAR((m.gamma0 - (Eigen::MatrixXd(2, 2) << 5, 1, 1, 3).finished()).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(StationaryCov, ResidualSymmetryAndPsd) {
  RandomSource gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    ThinningMatrix P{{0.9 * gen.uniform(), 0.3 * gen.uniform()}, {0.3 * gen.uniform(), 0.9 * gen.uniform()}};
    if (spectral_radius(P) >= 0.97) continue;
    const double l1 = 0.05 + 5 * gen.uniform(), l2 = 0.05 + 5 * gen.uniform();
    const BivPoissonParams innov{l1, l2, std::min(l1, l2) * gen.uniform()};
    const auto m = stationary_cov(P, innov);
    const auto bm = bp_moments(innov);
    EXPECT_LT(residual(P, m.mu, m.gamma0, bm.cov).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((m.gamma0 - m.gamma0.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m.gamma0).eigenvalues().minCoeff(), -1e-10);
    EXPECT_GE(m.mu.minCoeff(), 0.0);
  }
}

TEST(StationaryCov, StepChangesContractAtSquaredSpectralRadius) {
  const ThinningMatrix P{{0.6, 0.2}, {0.3, 0.5}};
  const auto m = stationary_cov(P, BivPoissonParams{2, 1, 0.5});
  const double rho2 = std::pow(spectral_radius(P), 2);
  ASSERT_GT(m.step_changes.size(), 10u);
  // Asymptotic rate: the ratio of deltas k apart tends to rho^(2k).
  const std::size_t k = 5;
  for (std::size_t i = 5; i + k < m.step_changes.size() && m.step_changes[i + k] > 1e-13; ++i) {
    const double ratio = std::pow(m.step_changes[i + k] / m.step_changes[i], 1.0 / static_cast<double>(k));
    EXPECT_LE(ratio, rho2 * (1 + 0.05)) << i;
  }
}

TEST(StationaryCov, NonconvergenceIsReported) {
  FixedPointOptions opts;
  opts.max_iterations = 3;
  EXPECT_THROW(stationary_cov(ThinningMatrix{{0.9, 0.05}, {0.05, 0.9}}, BivPoissonParams{1, 1, 0.5}, opts),
               NumericalError);
}

TEST(StationaryCov, RejectsNonstationary) {
  EXPECT_THROW(stationary_cov(ThinningMatrix{{1, 1}, {1, 1}}, BivPoissonParams{1, 1, 0}), StationarityError);
}

TEST(Autocov, LagZeroAndNegative) {
  const auto m = stationary_cov(kDaily, kDailyInnov);
  EXPECT_EQ(autocov(m.gamma0, kDaily, 0), m.gamma0);
  EXPECT_THROW(autocov(m.gamma0, kDaily, -1), DomainError);
  EXPECT_LT((autocov(m.gamma0, kDaily, 3) - kDaily.matrix() * kDaily.matrix() * kDaily.matrix() * m.gamma0)
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(CorrelationSummary, DailyLaggedCorrelations) {
  const auto c = correlation_summary(kDaily, kDailyInnov);
  EXPECT_NEAR(c.auto1, 0.086, 0.002);
  EXPECT_NEAR(c.cross12, 0.055, 0.002);
}

TEST(CorrelationSummary, IidReductions) {
  const auto zero = correlation_summary(ThinningMatrix::zeros(2), BivPoissonParams{2, 3, 0});
  EXPECT_EQ(zero.contemporaneous, 0.0);
  EXPECT_EQ(zero.auto1, 0.0);
  EXPECT_EQ(zero.auto2, 0.0);
  EXPECT_EQ(zero.cross12, 0.0);
  const auto shock = correlation_summary(ThinningMatrix::zeros(2), BivPoissonParams{2, 3, 1});
  EXPECT_NEAR(shock.contemporaneous, 1.0 / std::sqrt(6.0), 1e-14);
  EXPECT_EQ(shock.auto1, 0.0);
  EXPECT_EQ(shock.cross12, 0.0);
}

TEST(StationaryMoments, MatchSimulation) {
  const ThinningMatrix P{{0.35, 0.15}, {0.2, 0.3}};
  const BivPoissonParams innov{1.5, 0.8, 0.4};
  const auto m = stationary_cov(P, innov);
  const Eigen::MatrixXd g1 = autocov(m.gamma0, P, 1);
  RandomSource rng(99);
  const std::size_t steps = 1000000;
  const auto s = simulate_minar(P, BivPoissonSampler(innov), CountVector{2, 1}, steps, rng);
  std::vector<double> x1, x2;
  for (std::size_t t = 1000; t < s.size(); ++t) {
    x1.push_back(static_cast<double>(s(t, 0)));
    x2.push_back(static_cast<double>(s(t, 1)));
  }
  EXPECT_NEAR(stats::mean(x1), m.mu(0), 4 * stats::batch_means_se(x1));
  EXPECT_NEAR(stats::mean(x2), m.mu(1), 4 * stats::batch_means_se(x2));

  const double m1 = stats::mean(x1), m2 = stats::mean(x2);
  auto products = [&](auto f) {
    std::vector<double> out;
    for (std::size_t t = 1; t < x1.size(); ++t) out.push_back(f(t));
    return out;
  };
  const auto v11 = products([&](std::size_t t) { return (x1[t] - m1) * (x1[t] - m1); });
  const auto v12 = products([&](std::size_t t) { return (x1[t] - m1) * (x2[t] - m2); });
  const auto cross = products([&](std::size_t t) { return (x1[t] - m1) * (x2[t - 1] - m2); });
  const auto lag11 = products([&](std::size_t t) { return (x1[t] - m1) * (x1[t - 1] - m1); });
  EXPECT_NEAR(stats::mean(v11), m.gamma0(0, 0), 4 * stats::batch_means_se(v11));
  EXPECT_NEAR(stats::mean(v12), m.gamma0(0, 1), 4 * stats::batch_means_se(v12));
  EXPECT_NEAR(stats::mean(cross), g1(0, 1), 4 * stats::batch_means_se(cross));
  EXPECT_NEAR(stats::mean(lag11), g1(0, 0), 4 * stats::batch_means_se(lag11));
}

TEST(StationaryMean, RandomParametersMatchSimulation) {
  RandomSource gen(5);
  for (int trial = 0; trial < 3; ++trial) {
    const ThinningMatrix P{{0.5 * gen.uniform(), 0.2 * gen.uniform()}, {0.2 * gen.uniform(), 0.5 * gen.uniform()}};
    const BivPoissonParams innov{0.2 + 2 * gen.uniform(), 0.2 + 2 * gen.uniform(), 0.1 * gen.uniform()};
    const auto mu = stationary_mean(P, vec2(innov.lambda1, innov.lambda2));
    RandomSource rng(100 + static_cast<std::uint64_t>(trial));
    const auto s = simulate_minar(P, BivPoissonSampler(innov), CountVector{0, 0}, 1000000, rng);
    for (std::size_t j = 0; j < 2; ++j) {
      std::vector<double> col;
      for (std::size_t t = 1000; t < s.size(); ++t) col.push_back(static_cast<double>(s(t, j)));
      EXPECT_NEAR(stats::mean(col), mu(static_cast<Eigen::Index>(j)), 4 * stats::batch_means_se(col));
    }
  }
}
