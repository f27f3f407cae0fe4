// Acceptance run: one PASS/FAIL line per criterion. Exits 0 once every
// criterion has been evaluated (--strict: nonzero if any failed), 2 if the
// run itself broke.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ivrl/harness/config.hpp"
#include "ivrl/harness/experiment.hpp"
#include "ivrl/harness/grad_check.hpp"
#include "ivrl/harness/metrics.hpp"
#include "ivrl/harness/oracle.hpp"
#include "ivrl/ivrl.hpp"

namespace {

using namespace ivrl;
using namespace ivrl::harness;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Gradient suite.
Verdict gradients() {
  const auto t0 = Clock::now();
  const auto report = grad_check_suite();
  const double secs = seconds_since(t0);
  const bool ok = report.passed() && report.entries.size() >= 50 && report.worst() < 1e-4 && secs < 30.0;
  return {ok, fmt("%zu instances, worst rel err %.2e (< 1e-4), %.2fs (< 30s)", report.entries.size(), report.worst(),
                  secs)};
}

ExperimentConfig chain_config() {
  return parse_config(
      "algorithm = iv-dqn\nscenario = chain-oracle\nseeds = 1\ntotal_steps = 50000\ngamma = 0.9\n"
      "hidden = none\nnonlinearity = identity\nlearning_rate = 0.0005\nbatch_size = 128\n"
      "epsilon_start = 1.0\nepsilon_end = 1.0\ntarget_sync = 500\ncandidates = standard\n");
}

// 2. Learned joint Q against the value-iteration fixed point.
Verdict bellman_oracle() {
  const auto t0 = Clock::now();
  const auto c = chain_config();
  const auto mdp = chain_oracle_mdp();
  const auto wset = candidate_set(c);
  const QTable qstar = value_iteration_oracle(mdp, wset, c.gamma, 1e-12);
  const double residual = bellman_residual(mdp, wset, c.gamma, qstar);

  const std::uint64_t seed = c.seeds.front();
  auto env = make_env(ScenarioConfig::defaults(c.scenario, seed));
  DqnAgent agent(env->observation_size(), env->action_count(), wset, dqn_settings(c), seed);
  for (std::size_t episode = 0; !agent.budget_exhausted(); ++episode) agent.run_episode(*env, episode_seed(seed, episode));

  double worst = 0.0;
  for (std::size_t s = 0; s < mdp.state_count(); ++s) {
    if (mdp.terminal(s)) continue;
    std::vector<double> obs(mdp.state_count(), 0.0);
    obs[s] = 1.0;
    const auto table = agent.q().table(obs);
    for (std::size_t w = 0; w < wset.size(); ++w) {
      for (std::size_t a = 0; a < mdp.action_count(); ++a) {
        worst = std::max(worst, std::abs(table[agent.q().index(a, w)] - qstar.at(s, w, a)));
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = residual < 1e-10 && worst < 0.05 && secs < 60.0;
  return {ok, fmt("|W|=%zu, %zu steps, max|Q-Q*| %.4f (< 0.05) over non-terminal triples, residual %.1e, %.2fs",
                  wset.size(), agent.steps(), worst, residual, secs)};
}

// 3. Reward kernel against independent summation oracles.
Verdict reward_kernel() {
  Rng rng(2024);
  double worst_dot = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const std::size_t k = 1 + rng.uniform_int(6);
    std::vector<double> u(k), w(k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      u[j] = rng.uniform(-10.0, 10.0);
      total += (w[j] = -std::log(1.0 - rng.uniform()));
    }
    for (auto& x : w) x /= total;
    double dot = 0.0;
    for (std::size_t j = 0; j < k; ++j) dot += u[j] * w[j];
    worst_dot = std::max(worst_dot, std::abs(compose_reward(u, w) - dot));
  }

  double worst_return = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> r(1 + rng.uniform_int(40));
    for (auto& x : r) x = rng.uniform(-2.0, 2.0);
    const double gamma = rng.uniform(0.0, 0.99);
    const auto g = discounted_return(r, gamma);
    for (std::size_t t = 0; t < r.size(); ++t) {
      double brute = 0.0;
      for (std::size_t j = t; j < r.size(); ++j) brute += std::pow(gamma, static_cast<double>(j - t)) * r[j];
      worst_return = std::max(worst_return, std::abs(g[t] - brute));

      const std::size_t n = 1 + rng.uniform_int(8);
      const double boot = rng.uniform(-5.0, 5.0);
      double nstep = 0.0;
      for (std::size_t j = 0; j < n && t + j < r.size(); ++j) nstep += std::pow(gamma, static_cast<double>(j)) * r[t + j];
      if (t + n < r.size()) nstep += std::pow(gamma, static_cast<double>(n)) * boot;
      worst_return = std::max(worst_return, std::abs(n_step_utility_return(r, t, n, gamma, boot) - nstep));
    }
  }
  const bool ok = worst_dot <= 1e-12 && worst_return <= 1e-12;
  return {ok, fmt("1e6 dot products worst %.1e, returns worst %.1e (<= 1e-12)", worst_dot, worst_return)};
}

// 4. Singleton-candidate DQN and frozen-needs A2C reduce to their baselines.
Verdict degenerate() {
  auto dqn = parse_config(
      "algorithm = iv-dqn\nscenario = center\nseeds = 11\ntotal_steps = 1000\nhidden = 32\nbatch_size = 16\n"
      "target_sync = 200\ncandidates = uniform\n");
  auto dqn_base = dqn;
  dqn_base.algorithm = Algorithm::fixed_weight_dqn;
  dqn_base.candidates = CandidateSpec::standard;
  dqn_base.fixed_weights = std::vector<double>(kGridChannels, 0.25);
  const auto a = run_seed(dqn, 11);
  const auto b = run_seed(dqn_base, 11);
  const bool dqn_same = !a.step_losses.empty() && a.step_losses == b.step_losses;

  auto a2c = parse_config(
      "algorithm = iv-a2c\nscenario = center\nseeds = 11\nepisodes = 20\nuniform_needs_init = true\nlr_needs = 0\n");
  auto a2c_base = a2c;
  a2c_base.algorithm = Algorithm::fixed_weight_a2c;
  a2c_base.uniform_needs_init = false;
  a2c_base.fixed_weights = std::vector<double>(kGridChannels, 0.25);
  const auto x = run_seed(a2c, 11).rows;
  const auto y = run_seed(a2c_base, 11).rows;
  bool a2c_same = x.size() == y.size() && x.size() == 20;
  for (std::size_t i = 0; a2c_same && i < x.size(); ++i) {
    a2c_same = x[i].loss_policy == y[i].loss_policy && x[i].loss_value == y[i].loss_value &&
               x[i].reward == y[i].reward && x[i].weights == y[i].weights;
  }
  return {dqn_same && a2c_same, fmt("dqn: %zu step losses %s; a2c: 20 episodes %s", a.step_losses.size(),
                                    dqn_same ? "bit-identical" : "DIFFER", a2c_same ? "bit-identical" : "DIFFER")};
}

ExperimentConfig a2c_run(ScenarioId scenario, std::vector<std::uint64_t> seeds, bool baseline = false) {
  ExperimentConfig c;
  c.algorithm = baseline ? Algorithm::fixed_weight_a2c : Algorithm::iv_a2c;
  c.scenario = scenario;
  c.seeds = std::move(seeds);
  c.episodes = 500;
  if (baseline) c.fixed_weights = std::vector<double>(kGridChannels, 0.25);
  validate(c);
  return c;
}

std::vector<const MetricsRow*> final_rows(const MetricsTable& t) {
  std::vector<const MetricsRow*> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i + 1 == t.size() || t[i + 1].seed != t[i].seed) out.push_back(&t[i]);
  }
  return out;
}

std::string weights_text(const std::vector<double>& w) {
  std::string s = "[";
  for (std::size_t k = 0; k < w.size(); ++k) s += fmt(k ? " %.2f" : "%.2f", w[k]);
  return s + "]";
}

struct Timed {
  MetricsTable table;
  double seconds_per_run = 0.0;
};

Timed timed_train(const ExperimentConfig& c) {
  Timed t;
  double worst = 0.0;
  for (std::uint64_t seed : c.seeds) {
    const auto t0 = Clock::now();
    auto rows = run_seed(c, seed).rows;
    worst = std::max(worst, seconds_since(t0));
    t.table.insert(t.table.end(), rows.begin(), rows.end());
  }
  t.seconds_per_run = worst;
  return t;
}

// 5a. Kill weight dominates on the combat scenarios.
Verdict kill_weight(std::vector<MetricsTable>& all) {
  std::string detail;
  bool ok = true;
  for (ScenarioId id : {ScenarioId::center, ScenarioId::line}) {
    const auto run = timed_train(a2c_run(id, {1, 2, 3}));
    all.push_back(run.table);
    int hits = 0;
    detail += std::string(detail.empty() ? "" : "; ") + to_string(id) + ":";
    for (const auto* row : final_rows(run.table)) {
      hits += row->weights[channel::kills] > 0.5;
      detail += " " + weights_text(row->weights);
    }
    detail += fmt(" kills>0.5 in %d/3, slowest run %.1fs", hits, run.seconds_per_run);
    ok = ok && hits >= 2 && run.seconds_per_run <= 300.0;
  }
  return {ok, detail};
}

// 5b. Environment-reward channel is the argmax on the corridor.
Verdict corridor_argmax(std::vector<MetricsTable>& all) {
  const auto run = timed_train(a2c_run(ScenarioId::corridor, {1, 2, 3}));
  all.push_back(run.table);
  int hits = 0;
  std::string detail = "corridor:";
  for (const auto* row : final_rows(run.table)) {
    const auto& w = row->weights;
    hits += static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin()) == channel::env_reward;
    detail += " " + weights_text(w);
  }
  detail += fmt(" env_reward argmax in %d/3, slowest run %.1fs", hits, run.seconds_per_run);
  return {hits >= 2 && run.seconds_per_run <= 300.0, detail};
}

double final_task_mean(const MetricsTable& t, std::size_t episodes, std::size_t window) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& row : t) {
    if (row.episode + window >= episodes) {
      total += row.task_score;
      ++n;
    }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

// 6. IV-A2C scores at least as well as fixed-weight A2C on the corridor.
Verdict ordering(std::vector<MetricsTable>& all) {
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const auto iv = train(a2c_run(ScenarioId::corridor, seeds));
  const auto base = train(a2c_run(ScenarioId::corridor, seeds, true));
  all.push_back(iv);
  all.push_back(base);
  const double iv_score = final_task_mean(iv, 500, 50);
  const double base_score = final_task_mean(base, 500, 50);
  return {iv_score >= base_score,
          fmt("corridor final-50 task score over 5 seeds: iv-a2c %.3f vs fixed-weight-a2c %.3f", iv_score, base_score)};
}

// 7. Determinism, simplex rows and the sampling invariants.
Verdict invariants(const std::vector<MetricsTable>& all) {
  std::vector<std::string> failures;

  auto small = parse_config("algorithm = iv-dqn\nscenario = line\nseeds = 4, 9\ntotal_steps = 2000\nhidden = 32\n");
  if (to_csv(train(small)) != to_csv(train(small))) failures.push_back("dqn metrics not byte-identical");
  auto small_a2c = a2c_run(ScenarioId::arena, {4, 9});
  small_a2c.episodes = 10;
  if (to_csv(train(small_a2c)) != to_csv(train(small_a2c))) failures.push_back("a2c metrics not byte-identical");

  std::size_t rows = 0;
  for (const auto& table : all) {
    for (const auto& row : table) {
      ++rows;
      const double total = std::accumulate(row.weights.begin(), row.weights.end(), 0.0);
      const bool nonneg = std::all_of(row.weights.begin(), row.weights.end(), [](double w) { return w >= 0.0; });
      if (!(std::abs(total - 1.0) <= 1e-6) || !nonneg) {
        failures.push_back(fmt("weight row off simplex (sum %.9g)", total));
        break;
      }
    }
  }

  const auto wset = WeightCandidateSet::standard(2);
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t cap = 1 + rng.uniform_int(20);
    const std::size_t n = rng.uniform_int(80);
    ReplayBuffer buf(cap, wset);
    for (std::size_t i = 0; i < n; ++i) {
      Transition t;
      t.obs = {static_cast<double>(i)};
      t.weight_id = rng.uniform_int(wset.size());
      t.utilities = UtilityVector{{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}};
      t.reward = compose_reward(t.utilities, wset[t.weight_id]);
      buf.push(std::move(t));
    }
    bool fifo = buf.size() == std::min(n, cap);
    for (std::size_t j = 0; fifo && j < buf.size(); ++j) fifo = buf.at(j).obs[0] == static_cast<double>(n - buf.size() + j);
    if (!fifo) {
      failures.push_back("replay FIFO order");
      break;
    }
  }

  {
    auto q = QHead::create(3, {8}, 4, 3, Nonlinearity::rectifier, 5);
    const std::vector<double> obs{0.3, -0.7, 0.1};
    const auto greedy = greedy_pair(q.table(obs), q.weight_count());
    const double epsilon = 0.3, n = 1e4;
    const double p = (1.0 - epsilon) + epsilon / 12.0;
    Rng draws(91);
    double hits = 0.0;
    for (int i = 0; i < 10000; ++i) hits += select_needs_behavior(q, obs, epsilon, draws) == greedy;
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    if (std::abs(hits / n - p) > 3.0 * sigma) failures.push_back(fmt("epsilon frequency %.4f vs %.4f", hits / n, p));
  }

  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> table(1 + rng.uniform_int(30));
    for (auto& x : table) x = rng.uniform(-5.0, 5.0);
    const std::size_t weights = 1 + rng.uniform_int(table.size());
    if (table.size() % weights) continue;
    const double scale = rng.uniform(0.1, 10.0), shift = rng.uniform(-100.0, 100.0);
    std::vector<double> moved(table);
    for (auto& x : moved) x = scale * x + shift;
    if (!(greedy_pair(moved, weights) == greedy_pair(table, weights))) {
      failures.push_back("argmax not scale invariant");
      break;
    }
  }

  std::string detail = fmt("byte-identical reruns, %zu weight rows on simplex, FIFO, epsilon +-3 sigma, argmax", rows);
  if (!failures.empty()) {
    detail = "";
    for (const auto& f : failures) detail += (detail.empty() ? "" : "; ") + f;
  }
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  bool strict = false;
  std::string report_path;
  app.add_flag("--strict", strict, "Exit 1 if any criterion fails");
  app.add_option("--report", report_path, "Also write the verdict lines to this file");
  CLI11_PARSE(app, argc, argv);

  std::vector<MetricsTable> tables;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"1", gradients},
      {"2", bellman_oracle},
      {"3", reward_kernel},
      {"4", degenerate},
      {"5a", [&] { return kill_weight(tables); }},
      {"5b", [&] { return corridor_argmax(tables); }},
      {"6", [&] { return ordering(tables); }},
      {"7", [&] { return invariants(tables); }},
  };

  std::string report;
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      std::fprintf(stderr, "criterion %s aborted: %s\n", id.c_str(), e.what());
      return 2;
    }
    failed += !v.pass;
    const std::string line = fmt("criterion %-2s %s  %s", id.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    report += line + '\n';
  }
  const std::string summary = fmt("%zu criteria, %d failed", criteria.size(), failed);
  std::printf("%s\n", summary.c_str());
  report += summary + '\n';
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << report;
  }
  return strict && failed ? 1 : 0;
}
