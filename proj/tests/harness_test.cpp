#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "ivrl/harness/config.hpp"
#include "ivrl/harness/curves.hpp"
#include "ivrl/harness/experiment.hpp"
#include "ivrl/harness/grad_check.hpp"
#include "ivrl/harness/metrics.hpp"

namespace {

using namespace ivrl;
using namespace ivrl::harness;
namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / ("ivrl_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_a2c(Algorithm algorithm = Algorithm::iv_a2c) {
  ExperimentConfig c;
  c.algorithm = algorithm;
  c.scenario = ScenarioId::center;
  c.seeds = {1, 2};
  c.episodes = 6;
  c.hidden = {16};
  if (is_baseline(algorithm)) c.fixed_weights = std::vector<double>(4, 0.25);
  return c;
}

ExperimentConfig small_dqn(Algorithm algorithm) {
  ExperimentConfig c;
  c.algorithm = algorithm;
  c.scenario = ScenarioId::center;
  c.seeds = {5};
  c.total_steps = 1000;
  c.hidden = {16};
  c.batch_size = 8;
  c.target_sync = 100;
  c.replay_capacity = 500;
  if (is_baseline(algorithm)) c.fixed_weights = std::vector<double>(4, 0.25);
  return c;
}

TEST(Experiment, IdenticalConfigsGiveIdenticalMetricsBytes) {
  const auto c = small_a2c();
  EXPECT_EQ(to_csv(train(c)), to_csv(train(c)));
  auto d = small_dqn(Algorithm::iv_dqn);
  d.seeds = {5, 6};
  EXPECT_EQ(to_csv(train(d)), to_csv(train(d)));
}

TEST(Experiment, RowsOrderedBySeedThenEpisode) {
  auto c = small_a2c();
  c.seeds = {9, 2, 4};
  const auto table = train(c);
  ASSERT_EQ(table.size(), 18u);
  const std::uint64_t sorted[] = {2, 4, 9};
  for (std::size_t i = 0; i < table.size(); ++i) {
    EXPECT_EQ(table[i].seed, sorted[i / 6]);
    EXPECT_EQ(table[i].episode, i % 6);
  }
}

TEST(Experiment, SeedResultsIndependentOfCompanions) {
  auto c = small_a2c();
  c.seeds = {2};
  const auto alone = train(c);
  c.seeds = {7, 2};
  const auto together = train(c);
  ASSERT_EQ(together.size(), 2 * alone.size());
  EXPECT_EQ(to_csv(alone), to_csv(MetricsTable(together.begin(), together.begin() + 6)));
}

TEST(Experiment, DifferentSeedsDiffer) {
  auto c = small_a2c();
  c.seeds = {1};
  const auto a = train(c);
  c.seeds = {2};
  const auto b = train(c);
  EXPECT_NE(a.front().reward, b.front().reward);
}

TEST(Experiment, FixedWeightRunsReportTheirWeights) {
  for (const auto& c : {small_a2c(Algorithm::fixed_weight_a2c), small_dqn(Algorithm::fixed_weight_dqn)}) {
    for (const auto& row : train(c)) EXPECT_EQ(row.weights, std::vector<double>(4, 0.25));
  }
}

TEST(Experiment, DqnBudgetCountsSteps) {
  const auto table = train(small_dqn(Algorithm::iv_dqn));
  EXPECT_EQ(table.back().steps, 1000u);
  for (std::size_t i = 1; i < table.size(); ++i) EXPECT_GT(table[i].steps, table[i - 1].steps);
}

TEST(Experiment, WeightsStayOnSimplex) {
  for (const auto& c : {small_a2c(), small_dqn(Algorithm::iv_dqn)}) {
    for (const auto& row : train(c)) {
      double total = 0.0;
      for (double w : row.weights) {
        EXPECT_GE(w, 0.0);
        total += w;
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(Degenerate, SingletonUniformDqnMatchesFixedWeightDqn) {
  auto iv = small_dqn(Algorithm::iv_dqn);
  iv.candidates = CandidateSpec::uniform;
  const auto a = run_seed(iv, 5);
  const auto b = run_seed(small_dqn(Algorithm::fixed_weight_dqn), 5);
  ASSERT_FALSE(a.step_losses.empty());
  EXPECT_EQ(a.step_losses, b.step_losses);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].reward, b.rows[i].reward);
}

TEST(Degenerate, FrozenUniformNeedsMatchFixedWeightA2c) {
  auto iv = small_a2c();
  iv.episodes = 20;
  iv.seeds = {3};
  iv.uniform_needs_init = true;
  iv.lr_needs = 0.0;
  auto fixed = small_a2c(Algorithm::fixed_weight_a2c);
  fixed.episodes = 20;
  fixed.seeds = {3};
  const auto a = train(iv);
  const auto b = train(fixed);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].loss_policy, b[i].loss_policy);
    EXPECT_EQ(a[i].loss_value, b[i].loss_value);
    EXPECT_EQ(a[i].reward, b[i].reward);
    EXPECT_EQ(a[i].weights, b[i].weights);
  }
}

TEST(RunExperiment, WritesMetricsTimingAndConfig) {
  auto c = small_a2c();
  c.output_dir = scratch_dir("write").string();
  const auto table = run_experiment(c);
  const auto out = output_paths(c);
  EXPECT_EQ(read_file(out.metrics.string()), to_csv(table));
  EXPECT_EQ(parse_config(read_file(out.config.string())), c);
  EXPECT_EQ(read_file(out.timing.string()).rfind(timing_header(), 0), 0u);
  fs::remove_all(c.output_dir);
}

TEST(RunExperiment, FailureRemovesPartialOutput) {
  auto c = small_a2c();
  c.output_dir = scratch_dir("partial").string();
  const auto out = output_paths(c);
  fs::create_directories(out.timing / "blocker");
  EXPECT_ANY_THROW(run_experiment(c));
  EXPECT_FALSE(fs::exists(out.metrics));
  EXPECT_FALSE(fs::exists(out.config));
  EXPECT_TRUE(fs::exists(out.directory));
  fs::remove_all(c.output_dir);
}

TEST(RunExperiment, UnwritableDirectoryLeavesNothingBehind) {
  const auto base = scratch_dir("blocked");
  fs::create_directories(base);
  write_file((base / "file").string(), "x");
  auto c = small_a2c();
  c.output_dir = (base / "file").string();
  EXPECT_ANY_THROW(run_experiment(c));
  EXPECT_EQ(read_file((base / "file").string()), "x");
  fs::remove_all(base);
}

MetricsRow curve_row(const std::string& run, std::uint64_t seed, std::size_t episode, double reward,
                     std::vector<double> w) {
  MetricsRow r;
  r.run_id = run;
  r.seed = seed;
  r.episode = episode;
  r.reward = reward;
  r.utilities.assign(w.size(), 0.0);
  r.weights = std::move(w);
  return r;
}

TEST(Curves, TrailingMeanWindow) {
  EXPECT_EQ(trailing_mean({1, 2, 3, 4}, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
  EXPECT_EQ(trailing_mean({4}, 10), (std::vector<double>{4}));
  EXPECT_THROW(trailing_mean({1}, 0), std::invalid_argument);
}

TEST(Curves, ConstantInputGivesConstantCurve) {
  MetricsTable t;
  for (std::size_t e = 0; e < 40; ++e) t.push_back(curve_row("r", 1, e, 3.0, {0.5, 0.5}));
  const auto d = curve_data(t).at("r");
  ASSERT_EQ(d.reward.size(), 40u);
  for (double x : d.reward) EXPECT_EQ(x, 3.0);
}

TEST(Curves, SingleEpisodeGivesOneRow) {
  const auto d = curve_data({curve_row("r", 1, 0, -2.0, {1.0})}).at("r");
  EXPECT_EQ(d.episodes, (std::vector<std::size_t>{0}));
  EXPECT_EQ(d.reward, (std::vector<double>{-2.0}));
}

TEST(Curves, SeedsAveragedBeforeSmoothing) {
  MetricsTable t{curve_row("r", 1, 0, 1.0, {1, 0}), curve_row("r", 2, 0, 3.0, {0, 1}),
                 curve_row("r", 1, 1, 5.0, {1, 0}), curve_row("r", 2, 1, 7.0, {1, 0})};
  const auto d = curve_data(t).at("r");
  EXPECT_EQ(d.reward, (std::vector<double>{2.0, 4.0}));
  EXPECT_EQ(d.weights[0], (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(d.weights[1], (std::vector<double>{0.75, 0.25}));
}

// Property: smoothed weight rows of real runs remain on the simplex.
TEST(Curves, SmoothedWeightsSumToOne) {
  const auto table = train(small_a2c());
  for (const auto& [run, d] : curve_data(table)) {
    for (const auto& w : d.weights) {
      double total = 0.0;
      for (double x : w) total += x;
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(Curves, EmitsOneFilePairPerRun) {
  MetricsTable t{curve_row("a", 1, 0, 1.0, {1, 0}), curve_row("b", 1, 0, 2.0, {0.25, 0.75})};
  const auto dir = scratch_dir("curves");
  const auto files = emit_curves(t, dir);
  ASSERT_EQ(files.size(), 4u);
  EXPECT_EQ(read_file((dir / "a_reward.dat").string()), "# episode reward\n0 1\n");
  EXPECT_EQ(read_file((dir / "b_weights.dat").string()), "# episode w0 w1\n0 0.25 0.75\n");
  EXPECT_THROW(curve_data({}), std::invalid_argument);
  fs::remove_all(dir);
}

TEST(GradCheck, SuitePassesOnEveryCheck) {
  const auto report = grad_check_suite();
  EXPECT_TRUE(report.passed()) << "worst " << report.worst();
  for (const auto& name : grad_check_names()) {
    std::size_t count = 0;
    for (const auto& e : report.entries) count += e.check == name;
    EXPECT_GE(count, 10u) << name;
  }
}

TEST(GradCheck, SignFlipIsCaught) {
  for (const auto& target : grad_check_names()) {
    GradCheckOptions options;
    options.instances_per_check = 2;
    options.tamper = [&](const std::string& check, ParamGradients& g) {
      if (check == target) {
        for (double& x : g.values()) x = -x;
      }
    };
    const auto report = grad_check_suite(options);
    EXPECT_FALSE(report.passed()) << target;
    EXPECT_GT(report.worst(target), 1.0) << target;
  }
}

TEST(GradCheck, SameSeedSameReport) {
  GradCheckOptions options;
  options.seed = 17;
  options.instances_per_check = 3;
  const auto a = grad_check_suite(options);
  const auto b = grad_check_suite(options);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].parameters, b.entries[i].parameters);
    EXPECT_EQ(a.entries[i].max_rel_error, b.entries[i].max_rel_error);
  }
}

}  // namespace
