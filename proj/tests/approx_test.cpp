#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "ivrl/approx.hpp"
#include "ivrl/rng.hpp"

namespace {

using namespace ivrl;

// Independent forward pass: explicit matrix-vector chain from the public
// weight and bias accessors.
std::vector<double> reference_forward(const Approximator& net, std::vector<double> a) {
  const auto& sizes = net.layer_sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    std::vector<double> next(sizes[l + 1]);
    for (std::size_t o = 0; o < sizes[l + 1]; ++o) {
      double z = net.bias(l, o);
      for (std::size_t i = 0; i < sizes[l]; ++i) z += net.weight(l, o, i) * a[i];
      switch (net.nonlinearity(l)) {
        case Nonlinearity::rectifier: next[o] = z > 0.0 ? z : 0.0; break;
        case Nonlinearity::hyperbolic_tangent: next[o] = std::tanh(z); break;
        case Nonlinearity::identity: next[o] = z; break;
      }
    }
    a = std::move(next);
  }
  return a;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

TEST(ApproxInit, SameSeedGivesIdenticalParameters) {
  const auto a = mlp_init({2, 1}, Nonlinearity::identity, 7);
  const auto b = mlp_init({2, 1}, Nonlinearity::identity, 7);
  EXPECT_TRUE(a.same_parameters(b));
}

TEST(ApproxInit, DifferentSeedsGiveDifferentParameters) {
  const auto a = mlp_init({2, 2}, Nonlinearity::identity, 1);
  const auto b = mlp_init({2, 2}, Nonlinearity::identity, 2);
  EXPECT_FALSE(a.same_parameters(b));
}

TEST(ApproxInit, BiasesStartAtZeroAndWeightsAreFanInScaled) {
  const auto net = mlp_init({3, 4, 2}, Nonlinearity::rectifier, 99);
  const auto& sizes = net.layer_sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    for (std::size_t o = 0; o < sizes[l + 1]; ++o) {
      EXPECT_EQ(net.bias(l, o), 0.0);
      for (std::size_t i = 0; i < sizes[l]; ++i) EXPECT_LE(std::abs(net.weight(l, o, i)), bound);
    }
  }
}

TEST(ApproxInit, RejectsDegenerateShapes) {
  EXPECT_THROW(mlp_init({}, Nonlinearity::identity, 0), std::invalid_argument);
  EXPECT_THROW(mlp_init({3}, Nonlinearity::identity, 0), std::invalid_argument);
  EXPECT_THROW(mlp_init({3, 0, 2}, Nonlinearity::identity, 0), std::invalid_argument);
}

TEST(ApproxForward, ZeroWeightsReturnLastBias) {
  auto net = mlp_init({3, 2}, Nonlinearity::identity, 5);
  for (auto& p : net.mutable_parameters()) p = 0.0;
  net.set_bias(0, 0, 1.5);
  net.set_bias(0, 1, -0.5);
  const std::vector<double> x{4.0, -3.0, 9.0};
  EXPECT_EQ(net.evaluate(x), (std::vector<double>{1.5, -0.5}));
}

TEST(ApproxForward, IdentityLayerPassesInputThrough) {
  auto net = mlp_init({2, 2}, Nonlinearity::identity, 5);
  for (auto& p : net.mutable_parameters()) p = 0.0;
  net.set_weight(0, 0, 0, 1.0);
  net.set_weight(0, 1, 1, 1.0);
  const std::vector<double> x{1.0, -2.0};
  EXPECT_EQ(net.evaluate(x), x);
}

TEST(ApproxForward, MatchesReferenceMatrixChain) {
  Rng rng(11);
  for (auto nl : {Nonlinearity::rectifier, Nonlinearity::hyperbolic_tangent, Nonlinearity::identity}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto net = mlp_init({4, 6, 5, 3}, nl, rng.next_u64());
      for (auto& p : net.mutable_parameters()) p = rng.uniform(-1.0, 1.0);
      const auto x = random_vector(rng, 4);
      const auto expected = reference_forward(net, x);
      const auto got = net.evaluate(x);
      ASSERT_EQ(got.size(), expected.size());
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-14);
    }
  }
}

TEST(ApproxForward, RejectsWrongInputLength) {
  auto net = mlp_init({3, 2}, Nonlinearity::identity, 1);
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(net.forward(x), std::invalid_argument);
}

TEST(ApproxForward, CachesEveryLayer) {
  auto net = mlp_init({3, 5, 4, 2}, Nonlinearity::rectifier, 1);
  const std::vector<double> x{0.1, 0.2, 0.3};
  net.forward(x);
  ASSERT_TRUE(net.has_cache());
  const auto& z = net.cached_preactivations();
  ASSERT_EQ(z.size(), 3u);
  EXPECT_EQ(z[0].size(), 5u);
  EXPECT_EQ(z[1].size(), 4u);
  EXPECT_EQ(z[2].size(), 2u);
}

TEST(ApproxBackward, LinearLayerGradientIsOuterProduct) {
  auto net = mlp_init({3, 2}, Nonlinearity::identity, 3);
  const std::vector<double> x{1.0, -2.0, 0.5};
  const std::vector<double> g{0.3, -1.1};
  net.forward(x);
  const auto grads = net.backward(g);
  for (std::size_t o = 0; o < 2; ++o) {
    EXPECT_DOUBLE_EQ(grads.bias(0, o), g[o]);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(grads.weight(0, o, i), g[o] * x[i]);
  }
}

TEST(ApproxBackward, ZeroOutputGradientGivesZero) {
  auto net = mlp_init({3, 4, 2}, Nonlinearity::hyperbolic_tangent, 3);
  const std::vector<double> x{1.0, -2.0, 0.5};
  net.forward(x);
  EXPECT_TRUE(net.backward(std::vector<double>{0.0, 0.0}).all_zero());
}

TEST(ApproxBackward, RequiresForwardFirst) {
  auto net = mlp_init({3, 2}, Nonlinearity::identity, 3);
  EXPECT_THROW(net.backward(std::vector<double>{1.0, 1.0}), std::logic_error);
  net.forward(std::vector<double>{1.0, 2.0, 3.0});
  net.mutable_parameters()[0] += 1.0;
  EXPECT_THROW(net.backward(std::vector<double>{1.0, 1.0}), std::logic_error);
}

// Property: 100 random (net, input) pairs agree with central differences.
TEST(ApproxBackward, MatchesFiniteDifferencesOnRandomNets) {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t in = 1 + rng.uniform_int(5);
    const std::size_t hidden = 1 + rng.uniform_int(6);
    const std::size_t out = 1 + rng.uniform_int(4);
    auto net = mlp_init({in, hidden, out}, Nonlinearity::hyperbolic_tangent, rng.next_u64());
    const auto x = random_vector(rng, in);
    const auto g = random_vector(rng, out);
    net.forward(x);
    const auto analytic = net.backward(g);
    auto f = [&](Approximator& n) {
      const auto y = n.forward(x);
      return std::inner_product(y.begin(), y.end(), g.begin(), 0.0);
    };
    worst = std::max(worst, max_relative_error(analytic, finite_diff_gradient(f, net)));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(ApproxUpdate, PlainStepArithmetic) {
  auto net = mlp_init({1, 1}, Nonlinearity::identity, 0);
  net.mutable_parameters()[0] = 1.0;
  ParamGradients g(net.layer_sizes());
  g.weight(0, 0, 0) = 2.0;
  auto opt = OptimizerState::plain(0.1);
  apply_update(net, g, opt);
  EXPECT_DOUBLE_EQ(net.weight(0, 0, 0), 0.8);
  EXPECT_EQ(opt.step, 1u);
}

TEST(ApproxUpdate, ZeroGradientIsANoOpForEveryMode) {
  for (auto opt : {OptimizerState::plain(0.5), OptimizerState::adaptive(0.5)}) {
    auto net = mlp_init({3, 4, 2}, Nonlinearity::rectifier, 8);
    const auto before = net;
    const ParamGradients zero(net.layer_sizes());
    apply_update(net, zero, opt);
    apply_update(net, zero, opt);
    EXPECT_TRUE(net.same_parameters(before));
    EXPECT_EQ(opt.step, 2u);
  }
}

TEST(ApproxUpdate, PlainDescentOnSquareContracts) {
  auto net = mlp_init({1, 1}, Nonlinearity::identity, 0);
  net.mutable_parameters()[0] = 1.0;
  auto opt = OptimizerState::plain(0.1);
  for (int i = 0; i < 100; ++i) {
    ParamGradients g(net.layer_sizes());
    g.weight(0, 0, 0) = 2.0 * net.weight(0, 0, 0);
    apply_update(net, g, opt);
  }
  EXPECT_NEAR(net.weight(0, 0, 0), std::pow(0.8, 100), 1e-15);
  EXPECT_LT(std::abs(net.weight(0, 0, 0)), 1e-3);
}

TEST(ApproxUpdate, AdaptiveFirstStepMovesByLearningRate) {
  auto net = mlp_init({1, 1}, Nonlinearity::identity, 0);
  net.mutable_parameters()[0] = 1.0;
  ParamGradients g(net.layer_sizes());
  g.weight(0, 0, 0) = 3.0;
  auto opt = OptimizerState::adaptive(0.01);
  apply_update(net, g, opt);
  // Bias-corrected moments are g and g^2 after one step.
  EXPECT_NEAR(net.weight(0, 0, 0), 1.0 - 0.01 * 3.0 / (3.0 + 1e-8), 1e-15);
}

TEST(ApproxUpdate, RejectsMismatchedOrNonFiniteGradients) {
  auto net = mlp_init({2, 2}, Nonlinearity::identity, 0);
  auto opt = OptimizerState::plain(0.1);
  EXPECT_THROW(apply_update(net, ParamGradients({2, 3}), opt), std::invalid_argument);
  ParamGradients g(net.layer_sizes());
  g.bias(0, 0) = std::nan("");
  EXPECT_THROW(apply_update(net, g, opt), std::domain_error);
}

TEST(Softmax, UniformLogitsGiveQuarterWeights) {
  const auto p = softmax(std::vector<double>{0, 0, 0, 0});
  for (double v : p) EXPECT_EQ(v, 0.25);
}

TEST(Softmax, EqualPairIsHalfHalf) {
  for (double c : {-700.0, -3.0, 0.0, 12.5, 800.0}) {
    const auto p = softmax(std::vector<double>{c, c});
    EXPECT_EQ(p[0], 0.5);
    EXPECT_EQ(p[1], 0.5);
  }
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const auto p = softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_NEAR(p[0], 1.0, 1e-300);
  EXPECT_GE(p[1], 0.0);
  EXPECT_LT(p[1], 1e-300);
}

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(softmax(std::vector<double>{1.0, INFINITY}), std::domain_error);
  EXPECT_THROW(softmax(std::vector<double>{}), std::invalid_argument);
}

// Property: always on the simplex and invariant to shifting every logit.
TEST(Softmax, SimplexAndShiftInvariance) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> z(1 + rng.uniform_int(8));
    for (auto& v : z) v = rng.uniform(-30.0, 30.0);
    const auto p = softmax(z);
    double total = 0.0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    const double c = rng.uniform(-100.0, 100.0);
    auto shifted = z;
    for (auto& v : shifted) v += c;
    const auto q = softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(FiniteDiff, SquareAtThree) {
  auto net = mlp_init({1, 1}, Nonlinearity::identity, 0);
  net.mutable_parameters()[0] = 3.0;
  const auto g = finite_diff_gradient([](Approximator& n) { return n.weight(0, 0, 0) * n.weight(0, 0, 0); }, net, 1e-5);
  EXPECT_NEAR(g.weight(0, 0, 0), 6.0, 1e-6);
  EXPECT_NEAR(g.bias(0, 0), 0.0, 1e-12);
  EXPECT_EQ(net.weight(0, 0, 0), 3.0);
}

TEST(FiniteDiff, ConstantObjectiveHasZeroGradient) {
  auto net = mlp_init({3, 2}, Nonlinearity::identity, 0);
  EXPECT_TRUE(finite_diff_gradient([](Approximator&) { return 4.2; }, net).all_zero());
}

TEST(FiniteDiff, RejectsStepOutsideRange) {
  auto net = mlp_init({1, 1}, Nonlinearity::identity, 0);
  auto f = [](Approximator&) { return 0.0; };
  EXPECT_THROW(finite_diff_gradient(f, net, 1e-9), std::invalid_argument);
  EXPECT_THROW(finite_diff_gradient(f, net, 1e-2), std::invalid_argument);
}

}  // namespace
