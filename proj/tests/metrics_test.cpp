#include <gtest/gtest.h>

#include <string>

#include "ivrl/harness/metrics.hpp"
#include "ivrl/rng.hpp"

namespace {

using namespace ivrl;
using namespace ivrl::harness;

MetricsRow grid_row() {
  MetricsRow r;
  r.run_id = "iv-a2c-center";
  r.seed = 3;
  r.episode = 7;
  r.steps = 1234;
  r.reward = -0.75;
  r.utilities = {-5, -1, 1, 2};
  r.weights = {0.25, 0.25, 0.25, 0.25};
  r.loss_policy = 0.125;
  r.loss_needs = -1.5;
  r.loss_value = 2.0;
  r.survival_ticks = 300;
  r.kills = 2;
  r.task_score = 2;
  return r;
}

TEST(Metrics, HeaderIsFixed) {
  EXPECT_STREQ(metrics_header(),
               "run_id,seed,episode,steps,reward,u0,u1,u2,u3,w0,w1,w2,w3,"
               "loss_q,loss_policy,loss_needs,loss_value,survival_ticks,kills,task_score");
}

TEST(Metrics, RowFormatting) {
  const auto csv = to_csv({grid_row()});
  EXPECT_EQ(csv, std::string(metrics_header()) +
                     "\niv-a2c-center,3,7,1234,-0.75,-5,-1,1,2,0.25,0.25,0.25,0.25,0,0.125,-1.5,2,300,2,2\n");
}

TEST(Metrics, NumbersUseNineSignificantDigits) {
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
  EXPECT_EQ(format_number(0.0), "0");
}

TEST(Metrics, TwoChannelRowsLeaveTrailingColumnsBlank) {
  MetricsRow r = grid_row();
  r.utilities = {0.5, -0.25};
  r.weights = {0.75, 0.25};
  const auto csv = to_csv({r});
  EXPECT_NE(csv.find(",-0.75,0.5,-0.25,,,0.75,0.25,,,0,"), std::string::npos) << csv;
  EXPECT_EQ(parse_csv(csv).front(), r);
}

TEST(Metrics, WeightsOffTheSimplexRejected) {
  MetricsRow r = grid_row();
  r.weights = {0.25, 0.25, 0.25, 0.26};
  EXPECT_THROW(to_csv({r}), MetricsError);
  r.weights = {0.25, 0.25, 0.25, 0.25 + 5e-7};
  EXPECT_NO_THROW(to_csv({r}));
}

TEST(Metrics, MismatchedChannelCountsRejected) {
  MetricsRow r = grid_row();
  r.utilities = {1, 2};
  EXPECT_THROW(to_csv({r}), MetricsError);
}

TEST(Metrics, ParseRejectsMalformedInput) {
  EXPECT_THROW(parse_csv("run,seed\n"), MetricsError);
  const std::string head = std::string(metrics_header()) + "\n";
  EXPECT_THROW(parse_csv(head + "a,1,2\n"), MetricsError);
  EXPECT_THROW(parse_csv(head + "a,x,0,1,0,1,,,,1,,,,0,0,0,0,0,0,0\n"), MetricsError);
  EXPECT_THROW(parse_csv(head + "a,1,0,1,0,1,,,,0.9,,,,0,0,0,0,0,0,0\n"), MetricsError);
  EXPECT_EQ(parse_csv(head + "a,1,0,1,0,1,,,,1,,,,0,0,0,0,0,0,0\n").size(), 1u);
}

TEST(Metrics, TimingFileCarriesWallClockOnly) {
  MetricsRow r = grid_row();
  r.wall_ms = 12.5;
  EXPECT_EQ(timing_csv({r}), "run_id,seed,episode,wall_ms\niv-a2c-center,3,7,12.5\n");
  MetricsRow slower = r;
  slower.wall_ms = 99.0;
  EXPECT_EQ(to_csv({r}), to_csv({slower}));
}

// Property: formatting then parsing reproduces every field to the printed
// precision, and a second round trip is byte-identical.
TEST(Metrics, RandomTablesRoundTrip) {
  Rng rng(12);
  MetricsTable table;
  for (int i = 0; i < 300; ++i) {
    MetricsRow r;
    r.run_id = "run" + std::to_string(rng.uniform_int(3));
    r.seed = rng.uniform_int(1000);
    r.episode = i;
    r.steps = rng.uniform_int(100000);
    r.reward = rng.uniform(-100.0, 100.0);
    const std::size_t k = rng.uniform_int(2) ? 4 : 2;
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      r.utilities.push_back(rng.uniform(-10.0, 10.0));
      r.weights.push_back(rng.uniform(0.01, 1.0));
      total += r.weights.back();
    }
    for (auto& w : r.weights) w /= total;
    r.loss_q = rng.uniform(0.0, 5.0);
    r.loss_policy = rng.uniform(-5.0, 5.0);
    r.survival_ticks = rng.uniform_int(300);
    r.kills = rng.uniform_int(20);
    r.task_score = rng.uniform(0.0, 2.0);
    table.push_back(r);
  }
  const auto csv = to_csv(table);
  const auto parsed = parse_csv(csv);
  ASSERT_EQ(parsed.size(), table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    EXPECT_EQ(parsed[i].run_id, table[i].run_id);
    EXPECT_EQ(parsed[i].seed, table[i].seed);
    EXPECT_EQ(parsed[i].kills, table[i].kills);
    EXPECT_NEAR(parsed[i].reward, table[i].reward, 1e-6);
    ASSERT_EQ(parsed[i].weights.size(), table[i].weights.size());
    for (std::size_t k = 0; k < parsed[i].weights.size(); ++k) {
      EXPECT_NEAR(parsed[i].weights[k], table[i].weights[k], 1e-9);
    }
  }
  EXPECT_EQ(to_csv(parsed), csv);
}

}  // namespace
