#pragma once

// Seeded training campaigns. Each seed owns its environment and agent; seeds
// run on separate threads and their rows are merged by (seed, episode).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <future>
#include <string>
#include <vector>

#include "ivrl/a2c.hpp"
#include "ivrl/dqn.hpp"
#include "ivrl/harness/config.hpp"
#include "ivrl/harness/metrics.hpp"
#include "ivrl/rng.hpp"
#include "ivrl/scenarios.hpp"

namespace ivrl::harness {

inline constexpr std::uint64_t kEpisodeSeedStream = 1000;

inline std::uint64_t episode_seed(std::uint64_t run_seed, std::size_t episode) {
  return derive_seed(run_seed, kEpisodeSeedStream + episode);
}

inline WeightCandidateSet candidate_set(const ExperimentConfig& c) {
  const std::size_t k = scenario_channels(c.scenario);
  if (c.algorithm == Algorithm::fixed_weight_dqn) return WeightCandidateSet::singleton(NeedsWeights(*c.fixed_weights));
  switch (c.candidates) {
    case CandidateSpec::standard: return WeightCandidateSet::standard(k);
    case CandidateSpec::uniform: return WeightCandidateSet::singleton(NeedsWeights::uniform(k));
    case CandidateSpec::basis: {
      std::vector<NeedsWeights> basis;
      for (std::size_t i = 0; i < k; ++i) basis.push_back(NeedsWeights::basis(k, i));
      return WeightCandidateSet(std::move(basis));
    }
  }
  throw std::logic_error("unknown candidate spec");
}

inline DqnSettings dqn_settings(const ExperimentConfig& c) {
  DqnSettings s;
  s.hidden = c.hidden;
  s.nonlinearity = c.nonlinearity;
  s.gamma = c.gamma;
  s.batch_size = c.batch_size;
  s.buffer_capacity = c.replay_capacity;
  s.optimizer = c.optimizer;
  s.learning_rate = c.learning_rate;
  s.epsilon_start = c.epsilon_start;
  s.epsilon_end = c.epsilon_end;
  s.epsilon_decay_fraction = c.epsilon_decay_fraction;
  s.total_steps = c.total_steps;
  s.target_sync = c.target_sync;
  s.learning_starts = c.learning_starts;
  return s;
}

inline A2cSettings a2c_settings(const ExperimentConfig& c) {
  A2cSettings s;
  s.hidden = c.hidden;
  s.nonlinearity = c.nonlinearity;
  s.gamma = c.gamma;
  s.n_step = c.n_step;
  s.entropy_beta = c.entropy_beta;
  s.lr_policy = c.lr_policy;
  s.lr_needs = c.lr_needs;
  s.lr_value = c.lr_value;
  s.optimizer = c.optimizer;
  s.uniform_needs_init = c.uniform_needs_init;
  if (c.algorithm == Algorithm::fixed_weight_a2c) s.fixed_needs = NeedsWeights(*c.fixed_weights);
  return s;
}

struct SeedRun {
  MetricsTable rows;
  std::vector<double> step_losses;  // dqn only: every gradient step in order
};

inline MetricsRow to_row(const std::string& run_id, std::uint64_t seed, std::size_t episode, std::size_t steps,
                         const EpisodeSummary& s, double wall_ms) {
  MetricsRow r;
  r.run_id = run_id;
  r.seed = seed;
  r.episode = episode;
  r.steps = steps;
  r.reward = s.reward_sum;
  r.utilities = s.utility_sums;
  r.weights = s.weights;
  r.loss_q = s.loss_q;
  r.loss_policy = s.loss_policy;
  r.loss_needs = s.loss_needs;
  r.loss_value = s.loss_value;
  r.survival_ticks = s.info.survival_ticks;
  r.kills = s.info.total_kills;
  r.task_score = s.info.task_score;
  r.wall_ms = wall_ms;
  return r;
}

// Trains one seed to its budget. DQN budgets count environment steps, A2C
// budgets count episodes.
inline SeedRun run_seed(const ExperimentConfig& c, std::uint64_t seed) {
  validate(c);
  using Clock = std::chrono::steady_clock;
  const std::string run_id = c.effective_run_name();
  auto env = make_env(ScenarioConfig::defaults(c.scenario, seed));
  SeedRun out;
  std::size_t steps = 0;
  auto elapsed_ms = [](Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  if (is_dqn(c.algorithm)) {
    DqnAgent agent(env->observation_size(), env->action_count(), candidate_set(c), dqn_settings(c), seed);
    for (std::size_t episode = 0; !agent.budget_exhausted(); ++episode) {
      const auto t0 = Clock::now();
      const EpisodeSummary s = agent.run_episode(*env, episode_seed(seed, episode));
      steps = agent.steps();
      out.rows.push_back(to_row(run_id, seed, episode, steps, s, elapsed_ms(t0)));
    }
    out.step_losses = agent.step_losses();
  } else {
    A2cAgent agent(env->observation_size(), env->action_count(), env->channel_count(), a2c_settings(c), seed);
    for (std::size_t episode = 0; episode < c.episodes; ++episode) {
      const auto t0 = Clock::now();
      const EpisodeSummary s = agent.train_episode(*env, episode_seed(seed, episode));
      steps += s.length;
      out.rows.push_back(to_row(run_id, seed, episode, steps, s, elapsed_ms(t0)));
    }
  }
  return out;
}

// All seeds, merged deterministically. No files are touched.
inline MetricsTable train(const ExperimentConfig& c) {
  validate(c);
  std::vector<std::future<SeedRun>> runs;
  for (std::uint64_t seed : c.seeds) runs.push_back(std::async(std::launch::async, run_seed, std::cref(c), seed));
  MetricsTable table;
  std::exception_ptr failure;
  for (auto& f : runs) {
    try {
      auto run = f.get();
      table.insert(table.end(), std::make_move_iterator(run.rows.begin()), std::make_move_iterator(run.rows.end()));
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::stable_sort(table.begin(), table.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return a.seed != b.seed ? a.seed < b.seed : a.episode < b.episode;
  });
  return table;
}

struct ExperimentOutput {
  std::filesystem::path directory;
  std::filesystem::path metrics;
  std::filesystem::path timing;
  std::filesystem::path config;
};

inline ExperimentOutput output_paths(const ExperimentConfig& c) {
  ExperimentOutput o;
  o.directory = std::filesystem::path(c.output_dir) / c.effective_run_name();
  o.metrics = o.directory / "metrics.csv";
  o.timing = o.directory / "timing.csv";
  o.config = o.directory / "config.conf";
  return o;
}

// Trains and writes <output_dir>/<run>/{metrics.csv,timing.csv,config.conf}.
// On failure anything this call created is removed again.
inline MetricsTable run_experiment(const ExperimentConfig& c) {
  namespace fs = std::filesystem;
  validate(c);
  const ExperimentOutput out = output_paths(c);
  const bool existed = fs::exists(out.directory);
  std::vector<fs::path> written;
  try {
    MetricsTable table = train(c);
    fs::create_directories(out.directory);
    for (const auto& [path, bytes] :
         {std::pair{out.metrics, to_csv(table)}, {out.timing, timing_csv(table)}, {out.config, serialize(c)}}) {
      written.push_back(path);
      write_file(path.string(), bytes);
    }
    return table;
  } catch (...) {
    std::error_code ignored;
    if (existed) {
      for (const auto& p : written) fs::remove(p, ignored);
    } else {
      fs::remove_all(out.directory, ignored);
    }
    throw;
  }
}

}  // namespace ivrl::harness
