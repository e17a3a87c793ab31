#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "minar/likelihood.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace minar;

namespace {

const ThinningMatrix kSet1{{0.25, 0.05}, {0.1, 0.4}};
const BivPoissonParams kSet1Innov{5, 3, 1};

CountSeries simulate(const ThinningMatrix& P, const BivPoissonParams& innov, std::size_t steps, std::uint64_t seed) {
  RandomSource rng(seed);
  return simulate_minar(P, BivPoissonSampler(innov), CountVector{0, 0}, steps, rng);
}

}  // namespace

TEST(ThinningTransition, EmptyPrevious) {
  EXPECT_EQ(thinning_transition_logpmf(0, {0, 0}, 0.3, 0.6), 0.0);
  EXPECT_EQ(thinning_transition_logpmf(1, {0, 0}, 0.3, 0.6), kNegInf);
  EXPECT_EQ(thinning_transition_logpmf(-1, {2, 3}, 0.3, 0.6), kNegInf);
  EXPECT_EQ(thinning_transition_logpmf(6, {2, 3}, 0.3, 0.6), kNegInf);
}

TEST(ThinningTransition, EqualProbabilitiesCollapseToBinomial) {
  for (int n = 0; n <= 5; ++n) {
    EXPECT_NEAR(std::exp(thinning_transition_logpmf(n, {2, 3}, 0.5, 0.5)), static_cast<double>(oracle::binom(n, 5, 0.5)),
                1e-15);
  }
}

TEST(ThinningTransition, Normalizes) {
  double total = 0.0;
  for (int n = 0; n <= 5; ++n) total += std::exp(thinning_transition_logpmf(n, {2, 3}, 0.25, 0.05));
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(ThinningTransition, RejectsBadProbability) {
  EXPECT_THROW(thinning_transition_logpmf(0, {1, 1}, 1.5, 0.5), DomainError);
}

TEST(TransitionLogprob, ReducesToInnovationPmf) {
  for (Count x = 0; x < 6; ++x)
    for (Count y = 0; y < 6; ++y) {
      EXPECT_NEAR(transition_logprob({x, y}, {0, 0}, kSet1, kSet1Innov), bp_logpmf(x, y, kSet1Innov), 1e-12);
      EXPECT_NEAR(transition_logprob({x, y}, {4, 7}, ThinningMatrix::zeros(2), kSet1Innov),
                  bp_logpmf(x, y, kSet1Innov), 1e-12);
    }
}

TEST(TransitionLogprob, MatchesBruteForceExample) {
  const long double expected = oracle::transition({1, 2}, {2, 1}, kSet1, kSet1Innov);
  EXPECT_NEAR(std::exp(transition_logprob({1, 2}, {2, 1}, kSet1, kSet1Innov)) / static_cast<double>(expected), 1.0,
              1e-10);
}

TEST(TransitionLogprob, MatchesBruteForceRandomInstances) {
  RandomSource gen(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const ThinningMatrix P{{gen.uniform(), gen.uniform()}, {gen.uniform(), gen.uniform()}};
    const double l1 = 0.05 + 6 * gen.uniform(), l2 = 0.05 + 6 * gen.uniform();
    const BivPoissonParams bp{l1, l2, std::min(l1, l2) * gen.uniform()};
    const CountPair prev{static_cast<Count>(gen.next_u64() % 5), static_cast<Count>(gen.next_u64() % 5)};
    const CountPair n{static_cast<Count>(gen.next_u64() % 5), static_cast<Count>(gen.next_u64() % 5)};
    const long double expected = oracle::transition(n, prev, P, bp);
    EXPECT_NEAR(std::exp(transition_logprob(n, prev, P, bp)) / static_cast<double>(expected), 1.0, 1e-10);
  }
}

TEST(TransitionLogprob, KernelNormalizes) {
  RandomSource gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ThinningMatrix P{{gen.uniform(), gen.uniform()}, {gen.uniform(), gen.uniform()}};
    const double l1 = 0.1 + 3 * gen.uniform(), l2 = 0.1 + 3 * gen.uniform();
    const BivPoissonParams bp{l1, l2, std::min(l1, l2) * gen.uniform()};
    const CountPair prev{static_cast<Count>(gen.next_u64() % 6), static_cast<Count>(gen.next_u64() % 6)};
    const Count K = prev[0] + prev[1] + 40;
    double total = 0.0;
    for (Count x = 0; x <= K; ++x)
      for (Count y = 0; y <= K; ++y) total += std::exp(transition_logprob({x, y}, prev, P, bp));
    EXPECT_GE(total, 1.0 - 1e-8);
    EXPECT_LE(total, 1.0 + 1e-8);
  }
}

TEST(ConditionalLoglik, LengthTwoEqualsSingleTransition) {
  CountSeries s(2);
  s.push_back(CountVector{3, 1});
  s.push_back(CountVector{2, 4});
  EXPECT_NEAR(conditional_loglik(s, kSet1, kSet1Innov), transition_logprob({2, 4}, {3, 1}, kSet1, kSet1Innov), 1e-12);
}

TEST(ConditionalLoglik, FastPathMatchesLogSpaceSum) {
  const auto s = simulate(kSet1, kSet1Innov, 2000, 11);
  double direct = 0.0;
  for (std::size_t t = 1; t < s.size(); ++t) {
    direct += transition_logprob({s(t, 0), s(t, 1)}, {s(t - 1, 0), s(t - 1, 1)}, kSet1, kSet1Innov);
  }
  const TransitionLikelihood lik(s);
  EXPECT_EQ(lik.transitions(), 2000u);
  EXPECT_LT(lik.distinct_transitions(), 2000u);
  EXPECT_NEAR(lik(kSet1, kSet1Innov), direct, 1e-9 * std::abs(direct));
  // Evaluated away from the generating parameters too.
  const ThinningMatrix other{{0.6, 0.0}, {0.0, 0.01}};
  const BivPoissonParams other_innov{1.0, 9.0, 0.0};
  double direct_other = 0.0;
  for (std::size_t t = 1; t < s.size(); ++t) {
    direct_other += transition_logprob({s(t, 0), s(t, 1)}, {s(t - 1, 0), s(t - 1, 1)}, other, other_innov);
  }
  EXPECT_NEAR(lik(other, other_innov), direct_other, 1e-9 * std::abs(direct_other));
}

TEST(ConditionalLoglik, UnderflowFallsBackToLogSpace) {
  CountSeries s(2);
  s.push_back(CountVector{0, 0});
  s.push_back(CountVector{150, 0});
  const BivPoissonParams tiny{0.01, 0.01, 0.0};
  const double v = conditional_loglik(s, ThinningMatrix::zeros(2), tiny);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, bp_logpmf(150, 0, tiny), 1e-9 * std::abs(v));
}

TEST(ConditionalLoglik, Additivity) {
  const auto s = simulate(kSet1, kSet1Innov, 500, 12);
  const double whole = conditional_loglik(s, kSet1, kSet1Innov);
  const double head = conditional_loglik(s.slice(0, 201), kSet1, kSet1Innov);
  const double tail = conditional_loglik(s.slice(200, s.size()), kSet1, kSet1Innov);
  EXPECT_NEAR(whole, head + tail, 1e-9 * std::abs(whole));
}

TEST(ConditionalLoglik, PerStepProbabilitiesBounded) {
  const auto s = simulate(ThinningMatrix{{0.7, 0.2}, {0.1, 0.5}}, BivPoissonParams{0.5, 1.5, 0.3}, 300, 13);
  for (std::size_t t = 1; t < s.size(); ++t) {
    const double lp = transition_logprob({s(t, 0), s(t, 1)}, {s(t - 1, 0), s(t - 1, 1)}, kSet1, kSet1Innov);
    EXPECT_LE(lp, 0.0);
  }
}

TEST(ConditionalLoglik, ImpossibleTransitionIsNegInf) {
  CountSeries s(2);
  s.push_back(CountVector{4, 0});
  s.push_back(CountVector{5, 0});
  // With P = I all five survivors must persist.
  s.push_back(CountVector{0, 0});
  EXPECT_EQ(conditional_loglik(s, ThinningMatrix{{1, 0}, {0, 1}}, kSet1Innov), kNegInf);
}

TEST(ConditionalLoglik, RejectsShortOrWrongShape) {
  CountSeries one(2);
  one.push_back(CountVector{1, 1});
  EXPECT_THROW(conditional_loglik(one, kSet1, kSet1Innov), EstimationError);
  CountSeries three(3);
  three.push_back(CountVector{1, 1, 1});
  three.push_back(CountVector{1, 1, 1});
  EXPECT_THROW(TransitionLikelihood{three}, DimensionError);
}
