#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ivrl/innate_values.hpp"
#include "ivrl/rng.hpp"

namespace {

using namespace ivrl;

double dot_oracle(const std::vector<double>& u, const std::vector<double>& w) {
  return std::inner_product(u.begin(), u.end(), w.begin(), 0.0);
}

std::vector<double> random_simplex(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  double total = 0.0;
  for (auto& v : w) total += (v = -std::log(1.0 - rng.uniform()));
  for (auto& v : w) v /= total;
  return w;
}

std::vector<double> random_utilities(Rng& rng, std::size_t k) {
  std::vector<double> u(k);
  for (auto& v : u) v = rng.uniform(-10.0, 10.0);
  return u;
}

// sum_{j >= t} gamma^(j - t) r_j by explicit powers.
double power_sum(const std::vector<double>& r, std::size_t t, double gamma) {
  double total = 0.0;
  for (std::size_t j = t; j < r.size(); ++j) total += std::pow(gamma, static_cast<double>(j - t)) * r[j];
  return total;
}

TEST(NeedsWeights, EnforcesSimplex) {
  EXPECT_NO_THROW(NeedsWeights({0.25, 0.25, 0.25, 0.25}));
  EXPECT_THROW(NeedsWeights({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(NeedsWeights({1.5, -0.5}), std::invalid_argument);
  EXPECT_THROW(NeedsWeights(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(NeedsWeights({NAN, 1.0}), std::invalid_argument);
}

TEST(NeedsWeights, UniformIsQuarterForFourChannels) {
  const auto w = NeedsWeights::uniform(4);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(w[k], 0.25);
}

TEST(ComposeReward, UniformWeightsExample) {
  const std::vector<double> u{-5, -1, 1, 2};
  EXPECT_DOUBLE_EQ(compose_reward(u, NeedsWeights::uniform(4).values()), -0.75);
}

TEST(ComposeReward, BasisVectorPicksChannel) {
  const std::vector<double> u{3.5, -1.25, 0.01, 7.0};
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(compose_reward(u, NeedsWeights::basis(4, k).values()), u[k]);
}

TEST(ComposeReward, RejectsBadInputs) {
  const std::vector<double> w{0.5, 0.5};
  EXPECT_THROW(compose_reward(std::vector<double>{1.0}, w), std::invalid_argument);
  EXPECT_THROW(compose_reward(std::vector<double>{1.0, INFINITY}, w), std::invalid_argument);
  EXPECT_THROW(compose_reward(std::vector<double>{1.0, 1.0}, std::vector<double>{0.7, 0.7}), std::invalid_argument);
}

TEST(ComposeReward, MatchesDotProductOracle) {
  Rng rng(17);
  for (int i = 0; i < 100000; ++i) {
    const std::size_t k = 1 + rng.uniform_int(6);
    const auto w = random_simplex(rng, k);
    const auto u = random_utilities(rng, k);
    ASSERT_NEAR(compose_reward(u, w), dot_oracle(u, w), 1e-12);
  }
}

TEST(ComposeReward, BilinearInUtilities) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto w = random_simplex(rng, 4);
    const auto u = random_utilities(rng, 4);
    const auto v = random_utilities(rng, 4);
    const double a = rng.uniform(-3.0, 3.0);
    std::vector<double> au(4), sum(4);
    for (std::size_t k = 0; k < 4; ++k) {
      au[k] = a * u[k];
      sum[k] = u[k] + v[k];
    }
    EXPECT_NEAR(compose_reward(au, w), a * compose_reward(u, w), 1e-12);
    EXPECT_NEAR(compose_reward(sum, w), compose_reward(u, w) + compose_reward(v, w), 1e-12);
  }
}

TEST(ComposeReward, AdditiveInWeights) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const auto w1 = random_simplex(rng, 4);
    const auto w2 = random_simplex(rng, 4);
    const auto u = random_utilities(rng, 4);
    const double lambda = rng.uniform();
    std::vector<double> mix(4);
    for (std::size_t k = 0; k < 4; ++k) mix[k] = lambda * w1[k] + (1.0 - lambda) * w2[k];
    EXPECT_NEAR(compose_reward(u, mix), lambda * compose_reward(u, w1) + (1.0 - lambda) * compose_reward(u, w2), 1e-12);
  }
}

TEST(ComposeReward, PermutationEquivariant) {
  Rng rng(6);
  std::vector<std::size_t> perm{0, 1, 2, 3};
  for (int i = 0; i < 200; ++i) {
    const auto w = random_simplex(rng, 4);
    const auto u = random_utilities(rng, 4);
    std::next_permutation(perm.begin(), perm.end());
    std::vector<double> pw(4), pu(4);
    for (std::size_t k = 0; k < 4; ++k) {
      pw[k] = w[perm[k]];
      pu[k] = u[perm[k]];
    }
    EXPECT_NEAR(compose_reward(pu, pw), compose_reward(u, w), 1e-12);
  }
}

TEST(DiscountedReturn, ZeroDiscountCopiesRewards) {
  const std::vector<double> r{3, 7, 1};
  EXPECT_EQ(discounted_return(r, 0.0), r);
}

TEST(DiscountedReturn, ThreeOnesAtPointNine) {
  const std::vector<double> r{1, 1, 1};
  EXPECT_NEAR(discounted_return(r, 0.9)[0], 2.71, 1e-12);
}

TEST(DiscountedReturn, RejectsEmptyAndBadDiscount) {
  EXPECT_THROW(discounted_return(std::vector<double>{}, 0.5), std::invalid_argument);
  EXPECT_THROW(discounted_return(std::vector<double>{1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(discounted_return(std::vector<double>{1.0}, -0.1), std::invalid_argument);
}

TEST(DiscountedReturn, MatchesPowerSumAndRecursion) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(1 + rng.uniform_int(40));
    for (auto& v : r) v = rng.uniform(-2.0, 2.0);
    const double gamma = rng.uniform(0.0, 0.999);
    const auto g = discounted_return(r, gamma);
    for (std::size_t t = 0; t < r.size(); ++t) {
      EXPECT_NEAR(g[t], power_sum(r, t, gamma), 1e-12);
      if (t + 1 < r.size()) {
        EXPECT_NEAR(g[t] - r[t] - gamma * g[t + 1], 0.0, 1e-12);
      }
    }
  }
}

TEST(NStepReturn, WorkedExample) {
  const std::vector<double> r{1, 1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(n_step_utility_return(r, 0, 2, 0.5, 4.0), 2.5);
}

TEST(NStepReturn, BootstrapDroppedAtEpisodeEnd) {
  const std::vector<double> r{1, 2, 3};
  EXPECT_DOUBLE_EQ(n_step_utility_return(r, 1, 2, 0.5, 1000.0), 2.0 + 0.5 * 3.0);
  EXPECT_DOUBLE_EQ(n_step_utility_return(r, 2, 1, 0.5, 1000.0), 3.0);
}

TEST(NStepReturn, OneStepIsRewardPlusDiscountedBootstrap) {
  const std::vector<double> r{1.5, -2.0, 3.0};
  EXPECT_DOUBLE_EQ(n_step_utility_return(r, 0, 1, 0.9, 2.0), 1.5 + 0.9 * 2.0);
}

TEST(NStepReturn, RejectsOutOfRange) {
  const std::vector<double> r{1, 2};
  EXPECT_THROW(n_step_utility_return(r, 2, 1, 0.5, 0.0), std::out_of_range);
  EXPECT_THROW(n_step_utility_return(r, 0, 0, 0.5, 0.0), std::invalid_argument);
}

// Property: long horizons reduce to the tail return; short ones to a
// brute-force truncated sum plus bootstrap.
TEST(NStepReturn, MatchesBruteForce) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(1 + rng.uniform_int(30));
    for (auto& v : r) v = rng.uniform(-2.0, 2.0);
    const double gamma = rng.uniform(0.0, 0.99);
    const std::size_t T = r.size();
    const auto g = discounted_return(r, gamma);
    for (std::size_t t = 0; t < T; ++t) {
      EXPECT_NEAR(n_step_utility_return(r, t, T - t + rng.uniform_int(3), gamma, rng.uniform(-9, 9)), g[t], 1e-12);
      const std::size_t n = 1 + rng.uniform_int(6);
      const double boot = rng.uniform(-5.0, 5.0);
      double expected = 0.0;
      for (std::size_t k = 0; k < n && t + k < T; ++k) expected += std::pow(gamma, static_cast<double>(k)) * r[t + k];
      if (t + n < T) expected += std::pow(gamma, static_cast<double>(n)) * boot;
      EXPECT_NEAR(n_step_utility_return(r, t, n, gamma, boot), expected, 1e-12);
    }
  }
}

}  // namespace
