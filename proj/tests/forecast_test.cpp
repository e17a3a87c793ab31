#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "minar/forecast.hpp"
#include "minar/moments.hpp"
#include "test_support.hpp"

using namespace minar;

namespace {

const ThinningMatrix kDaily{{0.0817, 0.028}, {0.106, 0.1552}};
const BivPoissonParams kDailyInnov{0.1620, 0.4261, 0.0269};

Eigen::VectorXd lambda_of(const BivPoissonParams& b) { return Eigen::Vector2d(b.lambda1, b.lambda2); }

}  // namespace

TEST(ForecastMean, OneStepSpotValue) {
  const auto m = forecast_mean(kDaily, lambda_of(kDailyInnov), CountVector{1, 3}, 1);
  EXPECT_NEAR(m(0), 0.3277, 5e-5);
  EXPECT_NEAR(m(0), 0.0817 * 1 + 0.028 * 3 + 0.162, 1e-15);
}

TEST(ForecastMean, OneStepIsAffine) {
  const CountVector n{23, 46};
  const auto m = forecast_mean(kDaily, lambda_of(kDailyInnov), n, 1);
  const Eigen::Vector2d expect = kDaily.matrix() * Eigen::Vector2d(23, 46) + lambda_of(kDailyInnov);
  EXPECT_LT((m - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ForecastMean, ZeroMatrixAndZeroHorizon) {
  for (int h : {1, 2, 10}) {
    EXPECT_EQ(forecast_mean(ThinningMatrix::zeros(2), Eigen::Vector2d(5, 3), CountVector{7, 9}, h),
              Eigen::VectorXd(Eigen::Vector2d(5, 3)));
  }
  EXPECT_EQ(forecast_mean(kDaily, lambda_of(kDailyInnov), CountVector{7, 9}, 0), Eigen::VectorXd(Eigen::Vector2d(7, 9)));
  EXPECT_THROW(forecast_mean(kDaily, lambda_of(kDailyInnov), CountVector{7, 9}, -1), DomainError);
}

TEST(ForecastMean, DiagonalClosedForm) {
  const double p1 = 0.3, p2 = 0.7;
  const ThinningMatrix P{{p1, 0.0}, {0.0, p2}};
  for (int h : {1, 2, 5, 17}) {
    const auto m = forecast_mean(P, Eigen::Vector2d(2, 1), CountVector{4, 9}, h);
    EXPECT_NEAR(m(0), std::pow(p1, h) * 4 + (1 - std::pow(p1, h)) / (1 - p1) * 2, 1e-12);
    EXPECT_NEAR(m(1), std::pow(p2, h) * 9 + (1 - std::pow(p2, h)) / (1 - p2) * 1, 1e-12);
  }
}

TEST(ForecastMean, ConvergesToStationaryMean) {
  const auto mu = stationary_mean(kDaily, lambda_of(kDailyInnov));
  for (const CountVector& n : {CountVector{0, 0}, CountVector{23, 46}, CountVector{500, 3}}) {
    const auto m = forecast_mean(kDaily, lambda_of(kDailyInnov), n, 200);
    EXPECT_LT((m - mu).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ForecastVar, OneStepBase) {
  const CountVector n{23, 46};
  const auto v = forecast_var(kDaily, kDailyInnov, n, 1);
  const Eigen::MatrixXd V = kDaily.bernoulli_variances();
  Eigen::MatrixXd expect = Eigen::MatrixXd((V * Eigen::Vector2d(23, 46)).asDiagonal());
  expect += bp_moments(kDailyInnov).cov;
  EXPECT_LT((v - expect).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(forecast_var(kDaily, kDailyInnov, n, 0), Eigen::MatrixXd::Zero(2, 2));
}

TEST(ForecastVar, DiagonalClosedForm) {
  // Thinned Poisson innovations stay Poisson, so each margin is
  // p^h(1-p^h)N + lambda (1-p^h)/(1-p); the shared shock contributes
  // phi (1-(p1 p2)^h)/(1-p1 p2) to the covariance.
  const double p1 = 0.35, p2 = 0.6, l1 = 2.0, l2 = 1.5, phi = 0.4;
  const ThinningMatrix P{{p1, 0.0}, {0.0, p2}};
  const CountVector n{11, 4};
  for (int h : {1, 2, 3, 8}) {
    const auto v = forecast_var(P, BivPoissonParams{l1, l2, phi}, n, h);
    const double a = std::pow(p1, h), b = std::pow(p2, h);
    EXPECT_NEAR(v(0, 0), a * (1 - a) * 11 + l1 * (1 - a) / (1 - p1), 1e-12);
    EXPECT_NEAR(v(1, 1), b * (1 - b) * 4 + l2 * (1 - b) / (1 - p2), 1e-12);
    EXPECT_NEAR(v(0, 1), phi * (1 - std::pow(p1 * p2, h)) / (1 - p1 * p2), 1e-12);
    // Printed corollary form with Lambda_ii = lambda_i.
    const double printed = a * (1 - a) * 11 + (1 - a * a) / (1 - p1 * p1) * l1 +
                           ((1 - a) / (1 - p1) - (1 - a * a) / (1 - p1 * p1)) * l1;
    EXPECT_NEAR(v(0, 0), printed, 1e-12);
  }
}

TEST(ForecastVar, ConvergesToStationaryCovariance) {
  const auto g = stationary_cov(kDaily, kDailyInnov).gamma0;
  const auto v = forecast_var(kDaily, kDailyInnov, CountVector{23, 46}, 200);
  EXPECT_LT((v - g).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ForecastVar, MatchesSimulatedPaths) {
  const CountVector n0{23, 46};
  const int paths = 200000;
  for (int h : {1, 2, 5}) {
    const auto v = forecast_var(kDaily, kDailyInnov, n0, h);
    const auto m = forecast_mean(kDaily, lambda_of(kDailyInnov), n0, h);
    std::vector<double> x(paths), y(paths);
    for (int p = 0; p < paths; ++p) {
      RandomSource rng(77, static_cast<std::uint64_t>(p));
      const auto s = simulate_minar(kDaily, BivPoissonSampler(kDailyInnov), n0, static_cast<std::size_t>(h), rng);
      x[static_cast<std::size_t>(p)] = static_cast<double>(s(static_cast<std::size_t>(h), 0));
      y[static_cast<std::size_t>(p)] = static_cast<double>(s(static_cast<std::size_t>(h), 1));
    }
    const auto c11 = stats::sample_cov(x, x), c22 = stats::sample_cov(y, y), c12 = stats::sample_cov(x, y);
    EXPECT_NEAR(stats::mean(x), m(0), 4 * stats::stdev(x) / std::sqrt(paths));
    EXPECT_NEAR(c11.value, v(0, 0), 4 * c11.se) << h;
    EXPECT_NEAR(c22.value, v(1, 1), 4 * c22.se) << h;
    EXPECT_NEAR(c12.value, v(0, 1), 4 * c12.se) << h;
  }
}

TEST(Forecast, BundlesMeanAndCovariance) {
  const auto r = forecast(kDaily, kDailyInnov, CountVector{1, 3}, {1, 2});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1].horizon, 2);
  EXPECT_EQ(r[0].method, ForecastMethod::Analytic);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r[1].cov).eigenvalues().minCoeff(), 0.0);
}

TEST(TailTable, ZeroThresholdIsCertain) {
  TailOptions o;
  o.paths = 2000;
  const auto t = mc_tail_table(kDaily, kDailyInnov, CountVector{23, 46}, {1, 3, 7}, {0, 5, 20}, o);
  for (double p : t.probabilities[0]) EXPECT_EQ(p, 1.0);
  for (double se : t.std_errors[0]) EXPECT_EQ(se, 0.0);
}

TEST(TailTable, MonotoneInThresholdAndHorizon) {
  TailOptions o;
  o.paths = 5000;
  o.seed = 3;
  const auto t = mc_tail_table(kDaily, kDailyInnov, CountVector{23, 46}, {1, 3, 7, 14, 30}, {0, 5, 10, 15, 20, 25, 30, 40, 50}, o);
  for (std::size_t i = 0; i < t.thresholds.size(); ++i) {
    for (std::size_t j = 0; j < t.horizons.size(); ++j) {
      EXPECT_GE(t.probabilities[i][j], 0.0);
      EXPECT_LE(t.probabilities[i][j], 1.0);
      if (i > 0) EXPECT_LE(t.probabilities[i][j], t.probabilities[i - 1][j]);
      if (j > 0) EXPECT_GE(t.probabilities[i][j], t.probabilities[i][j - 1]);
    }
  }
}

TEST(TailTable, ReproducibleAndThreadIndependent) {
  TailOptions o;
  o.paths = 3000;
  o.seed = 11;
  const auto a = mc_tail_table(kDaily, kDailyInnov, CountVector{23, 46}, {1, 3}, {10, 20}, o);
  const auto b = mc_tail_table(kDaily, kDailyInnov, CountVector{23, 46}, {1, 3}, {10, 20}, o);
  o.threads = 3;
  const auto c = mc_tail_table(kDaily, kDailyInnov, CountVector{23, 46}, {1, 3}, {10, 20}, o);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  std::ostringstream x, y;
  write_tail_csv(x, a);
  write_tail_csv(y, c);
  EXPECT_EQ(x.str(), y.str());
}

TEST(TailTable, ForgetsInitialConditions) {
  TailOptions o;
  o.paths = 20000;
  const ThinningMatrix P{{0.4, 0.1}, {0.2, 0.3}};
  const BivPoissonParams innov{1.0, 0.8, 0.3};
  const auto lo = mc_tail_table(P, innov, CountVector{0, 0}, {200}, {100, 140, 160, 180}, o);
  o.seed = 99;
  const auto hi = mc_tail_table(P, innov, CountVector{60, 80}, {200}, {100, 140, 160, 180}, o);
  for (std::size_t i = 0; i < lo.thresholds.size(); ++i) {
    // The two starts differ in total expected mass by a bounded transient,
    // far below the spread of the 200-step sum.
    const double se = std::hypot(lo.std_errors[i][0], hi.std_errors[i][0]);
    EXPECT_LT(std::abs(lo.probabilities[i][0] - hi.probabilities[i][0]), 4 * se + 0.03) << lo.thresholds[i];
  }
}

TEST(TailTable, FullModelDominatesDiagonalAtHighThresholds) {
  TailOptions o;
  o.paths = 20000;
  const ThinningMatrix full{{0.0817, 0.028}, {0.106, 0.1552}};
  const ThinningMatrix diag{{0.0817, 0.0}, {0.0, 0.1552}};
  const auto a = mc_tail_table(full, kDailyInnov, CountVector{23, 46}, {1, 3}, {20, 25}, o);
  const auto b = mc_tail_table(diag, kDailyInnov, CountVector{23, 46}, {1, 3}, {20, 25}, o);
  for (std::size_t i = 0; i < a.thresholds.size(); ++i)
    for (std::size_t j = 0; j < a.horizons.size(); ++j) EXPECT_GT(a.probabilities[i][j], b.probabilities[i][j]);
}

TEST(TailTable, CsvLayout) {
  TailOptions o;
  o.paths = 10;
  const auto t = mc_tail_table(kDaily, kDailyInnov, CountVector{1, 1}, {3, 1}, {0, 2}, o);
  std::ostringstream os;
  write_tail_csv(os, t);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "n,T=1,T=3");
  EXPECT_EQ(os.str().substr(os.str().find('\n') + 1, 6), "0,1,1\n");
}

TEST(TailTable, RejectsBadInput) {
  EXPECT_THROW(mc_tail_table(kDaily, kDailyInnov, CountVector{1, 1}, {0}, {1}), DomainError);
  TailOptions o;
  o.paths = 0;
  EXPECT_THROW(mc_tail_table(kDaily, kDailyInnov, CountVector{1, 1}, {1}, {1}, o), DomainError);
}
