// ivrl: train agents, run the verification suites, emit plot data.
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ivrl/harness/config.hpp"
#include "ivrl/harness/curves.hpp"
#include "ivrl/harness/experiment.hpp"
#include "ivrl/harness/grad_check.hpp"
#include "ivrl/harness/metrics.hpp"
#include "ivrl/harness/oracle.hpp"
#include "ivrl/scenarios.hpp"

namespace {

using namespace ivrl;
using namespace ivrl::harness;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailed = 2;

int train_command(const std::string& path) {
  ExperimentConfig config;
  try {
    config = parse_config(read_file(path));
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << '\n';
    return kInvalid;
  }
  const MetricsTable table = run_experiment(config);
  const auto out = output_paths(config);
  std::printf("%s: %zu episodes over %zu seeds -> %s\n", config.effective_run_name().c_str(), table.size(),
              config.seeds.size(), out.metrics.string().c_str());
  for (std::uint64_t seed : config.seeds) {
    const MetricsRow* last = nullptr;
    for (const auto& row : table) {
      if (row.seed == seed) last = &row;
    }
    if (!last) continue;
    std::printf("  seed %llu: episode %zu, steps %zu, task score %s, weights", static_cast<unsigned long long>(seed),
                last->episode, last->steps, format_number(last->task_score).c_str());
    for (double w : last->weights) std::printf(" %s", format_number(w).c_str());
    std::printf("\n");
  }
  return kOk;
}

int grad_check_command(std::uint64_t seed) {
  GradCheckOptions options;
  options.seed = seed;
  const GradCheckReport report = grad_check_suite(options);
  for (const auto& name : grad_check_names()) {
    std::size_t count = 0;
    bool ok = true;
    for (const auto& e : report.entries) {
      if (e.check != name) continue;
      ++count;
      ok = ok && e.passed;
    }
    std::printf("%-16s %2zu instances  max rel err %.3e  %s\n", name.c_str(), count, report.worst(name),
                ok ? "ok" : "FAILED");
  }
  std::printf("%zu checks, worst %.3e, tolerance %.0e: %s\n", report.entries.size(), report.worst(), report.tolerance,
              report.passed() ? "pass" : "FAIL");
  return report.passed() ? kOk : kFailed;
}

int oracle_check_command(double tol) {
  if (!(tol > 0.0)) {
    std::cerr << "--tol must be positive\n";
    return kInvalid;
  }
  const auto mdp = chain_oracle_mdp();
  const auto wset = WeightCandidateSet::standard(mdp.channel_count());
  constexpr double gamma = 0.9;
  const QTable q = value_iteration_oracle(mdp, wset, gamma, tol);
  const QTable doubled = value_iteration_oracle(mdp, wset, gamma, tol, 2 * q.iterations);
  double drift = 0.0;
  for (std::size_t i = 0; i < q.values.size(); ++i) drift = std::max(drift, std::abs(q.values[i] - doubled.values[i]));
  const double residual = bellman_residual(mdp, wset, gamma, q);
  std::printf("chain-oracle |W|=%zu gamma=%g: %zu sweeps, residual %.3e, drift after doubling %.3e\n", wset.size(),
              gamma, q.iterations, residual, drift);
  for (std::size_t s = 0; s < q.states; ++s) {
    std::printf("  s%zu", s);
    for (std::size_t w = 0; w < q.weights; ++w) {
      for (std::size_t a = 0; a < q.actions; ++a) std::printf(" %10.6f", q.at(s, w, a));
    }
    std::printf("\n");
  }
  const bool ok = residual < tol && drift < std::max(1e-9, tol);
  std::printf("%s\n", ok ? "pass" : "FAIL");
  return ok ? kOk : kFailed;
}

int curves_command(const std::string& metrics, const std::string& outdir) {
  MetricsTable table;
  try {
    table = parse_csv(read_file(metrics));
  } catch (const std::exception& e) {
    std::cerr << metrics << ": " << e.what() << '\n';
    return kInvalid;
  }
  if (table.empty()) {
    std::cerr << metrics << ": no rows\n";
    return kInvalid;
  }
  for (const auto& p : emit_curves(table, outdir)) std::printf("%s\n", p.string().c_str());
  return kOk;
}

int map_dump_command(const std::string& name) {
  ScenarioId id;
  try {
    id = parse_scenario(name);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  }
  auto env = make_env(id);
  env->reset(0);
  std::printf("%s: %zu actions, %zu channels, observation %zu, cap %zu\n", to_string(id), env->action_count(),
              env->channel_count(), env->observation_size(), env->episode_cap());
  std::printf("%s", env->render().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Innate-values reinforcement learning lab"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "Train the agents described by a config file");
  train->add_option("config", config_path, "Config file")->required();

  std::uint64_t grad_seed = 0;
  auto* grad = app.add_subcommand("grad-check", "Compare analytic gradients with finite differences");
  grad->add_option("--seed", grad_seed, "Instance seed");

  double tol = 1e-12;
  auto* oracle = app.add_subcommand("oracle-check", "Solve chain-oracle by value iteration");
  oracle->add_option("--tol", tol, "Bellman residual tolerance");

  std::string metrics_path, outdir;
  auto* curves = app.add_subcommand("curves", "Write smoothed reward and weight curves");
  curves->add_option("metrics", metrics_path, "metrics.csv")->required();
  curves->add_option("outdir", outdir, "Output directory")->required();

  std::string scenario;
  auto* map = app.add_subcommand("map-dump", "Print a scenario's initial layout");
  map->add_option("scenario", scenario, "center, line, corridor, arena or chain-oracle")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*train) return train_command(config_path);
    if (*grad) return grad_check_command(grad_seed);
    if (*oracle) return oracle_check_command(tol);
    if (*curves) return curves_command(metrics_path, outdir);
    if (*map) return map_dump_command(scenario);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kFailed;
}
