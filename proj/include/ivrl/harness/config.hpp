#pragma once

// Experiment configuration: flat "key = value" text, '#' starts a comment,
// lists are comma separated. Unknown keys are errors.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivrl/approx.hpp"
#include "ivrl/grid_env.hpp"
#include "ivrl/innate_values.hpp"

namespace ivrl::harness {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigSyntaxError : public ConfigError {
 public:
  ConfigSyntaxError(std::size_t line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public ConfigError {
 public:
  ValidationError(std::string field, const std::string& what)
      : ConfigError(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Algorithm { iv_dqn, iv_a2c, fixed_weight_dqn, fixed_weight_a2c };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::iv_dqn: return "iv-dqn";
    case Algorithm::iv_a2c: return "iv-a2c";
    case Algorithm::fixed_weight_dqn: return "fixed-weight-dqn";
    case Algorithm::fixed_weight_a2c: return "fixed-weight-a2c";
  }
  return "?";
}

inline bool is_dqn(Algorithm a) { return a == Algorithm::iv_dqn || a == Algorithm::fixed_weight_dqn; }
inline bool is_baseline(Algorithm a) { return a == Algorithm::fixed_weight_dqn || a == Algorithm::fixed_weight_a2c; }

enum class CandidateSpec { standard, basis, uniform };

inline const char* to_string(CandidateSpec c) {
  switch (c) {
    case CandidateSpec::standard: return "standard";
    case CandidateSpec::basis: return "basis";
    case CandidateSpec::uniform: return "uniform";
  }
  return "?";
}

inline std::size_t scenario_channels(ScenarioId id) { return id == ScenarioId::chain_oracle ? 2 : kGridChannels; }

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::iv_a2c;
  ScenarioId scenario = ScenarioId::center;
  std::vector<std::uint64_t> seeds;
  std::string run_name;  // empty: "<algorithm>-<scenario>"
  std::string output_dir = "runs";

  // Budgets: a2c counts episodes, dqn counts environment steps.
  std::size_t episodes = 500;
  std::size_t total_steps = 50000;

  double gamma = 0.99;
  std::vector<std::size_t> hidden = {64};  // "none" in text: a linear net
  Nonlinearity nonlinearity = Nonlinearity::rectifier;
  OptimizerMode optimizer = OptimizerMode::adaptive;

  // iv-dqn
  double learning_rate = 1e-3;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.1;
  std::size_t batch_size = 32;
  std::size_t replay_capacity = 100000;
  std::size_t target_sync = 500;
  std::size_t learning_starts = 0;
  CandidateSpec candidates = CandidateSpec::standard;

  // iv-a2c
  std::size_t n_step = 5;
  double entropy_beta = 0.01;
  double lr_policy = 1e-3;
  double lr_needs = 1e-3;
  double lr_value = 1e-3;
  bool uniform_needs_init = false;

  // baselines only
  std::optional<std::vector<double>> fixed_weights;

  std::string effective_run_name() const {
    return run_name.empty() ? std::string(to_string(algorithm)) + "-" + to_string(scenario) : run_name;
  }

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline double parse_real(const std::string& field, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ValidationError(field, "expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) throw ValidationError(field, "expected a number, got '" + v + "'");
  return x;
}

inline std::uint64_t parse_unsigned(const std::string& field, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ValidationError(field, "expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ValidationError(field, "integer out of range: '" + v + "'");
  }
}

inline bool parse_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(field, "expected true or false, got '" + v + "'");
}

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw ValidationError("seeds", "at least one seed is required");
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < c.seeds.size(); ++j) {
      if (c.seeds[i] == c.seeds[j]) throw ValidationError("seeds", "duplicate seed " + std::to_string(c.seeds[i]));
    }
  }
  if (c.gamma < 0.0 || c.gamma >= 1.0) throw ValidationError("gamma", "must lie in [0, 1)");
  for (auto h : c.hidden) {
    if (h == 0) throw ValidationError("hidden", "layer widths must be positive");
  }
  if (c.output_dir.empty()) throw ValidationError("output_dir", "must not be empty");
  if (c.run_name.find_first_of("/\\,") != std::string::npos) {
    throw ValidationError("run_name", "must not contain path separators or commas");
  }

  if (is_dqn(c.algorithm)) {
    if (c.total_steps == 0) throw ValidationError("total_steps", "must be positive");
    if (c.learning_rate <= 0.0) throw ValidationError("learning_rate", "must be positive");
    if (c.epsilon_start < 0.0 || c.epsilon_start > 1.0) throw ValidationError("epsilon_start", "must lie in [0, 1]");
    if (c.epsilon_end < 0.0 || c.epsilon_end > 1.0) throw ValidationError("epsilon_end", "must lie in [0, 1]");
    if (c.epsilon_decay_fraction < 0.0 || c.epsilon_decay_fraction > 1.0) {
      throw ValidationError("epsilon_decay_fraction", "must lie in [0, 1]");
    }
    if (c.batch_size == 0) throw ValidationError("batch_size", "must be positive");
    if (c.replay_capacity < c.batch_size) throw ValidationError("replay_capacity", "must hold at least one batch");
    if (c.target_sync == 0) throw ValidationError("target_sync", "must be positive");
  } else {
    if (c.episodes == 0) throw ValidationError("episodes", "must be positive");
    if (c.n_step == 0) throw ValidationError("n_step", "must be at least 1");
    if (c.entropy_beta < 0.0) throw ValidationError("entropy_beta", "must be non-negative");
    if (c.lr_policy < 0.0) throw ValidationError("lr_policy", "must be non-negative");
    if (c.lr_needs < 0.0) throw ValidationError("lr_needs", "must be non-negative");
    if (c.lr_value < 0.0) throw ValidationError("lr_value", "must be non-negative");
  }

  if (is_baseline(c.algorithm)) {
    if (!c.fixed_weights) throw ValidationError("fixed_weights", std::string(to_string(c.algorithm)) + " requires a fixed weight vector");
    const std::size_t k = scenario_channels(c.scenario);
    if (c.fixed_weights->size() != k) {
      throw ValidationError("fixed_weights", "expected " + std::to_string(k) + " entries for this scenario");
    }
    if (!on_simplex(*c.fixed_weights)) throw ValidationError("fixed_weights", "must be non-negative and sum to 1");
  } else if (c.fixed_weights) {
    throw ValidationError("fixed_weights", std::string(to_string(c.algorithm)) + " learns its weights; remove fixed_weights");
  }
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::map<std::string, std::pair<std::string, std::size_t>> kv;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigSyntaxError(line_no, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigSyntaxError(line_no, "missing key before '='");
    if (value.empty()) throw ConfigSyntaxError(line_no, "missing value for '" + key + "'");
    if (kv.count(key)) throw ConfigSyntaxError(line_no, "duplicate key '" + key + "'");
    kv[key] = {value, line_no};
  }

  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second.first;
    kv.erase(it);
    return v;
  };
  auto real = [&](const char* key, double& dst) {
    if (auto v = take(key)) dst = detail::parse_real(key, *v);
  };
  auto count = [&](const char* key, std::size_t& dst) {
    if (auto v = take(key)) dst = static_cast<std::size_t>(detail::parse_unsigned(key, *v));
  };

  const auto algorithm = take("algorithm");
  if (!algorithm) throw ValidationError("algorithm", "required");
  if (*algorithm == "iv-dqn") c.algorithm = Algorithm::iv_dqn;
  else if (*algorithm == "iv-a2c") c.algorithm = Algorithm::iv_a2c;
  else if (*algorithm == "fixed-weight-dqn") c.algorithm = Algorithm::fixed_weight_dqn;
  else if (*algorithm == "fixed-weight-a2c") c.algorithm = Algorithm::fixed_weight_a2c;
  else throw ValidationError("algorithm", "unknown algorithm '" + *algorithm + "'");

  const auto scenario = take("scenario");
  if (!scenario) throw ValidationError("scenario", "required");
  try {
    c.scenario = parse_scenario(*scenario);
  } catch (const std::invalid_argument& e) {
    throw ValidationError("scenario", e.what());
  }

  const auto seeds = take("seeds");
  if (!seeds) throw ValidationError("seeds", "required");
  for (const auto& s : detail::split_list(*seeds)) c.seeds.push_back(detail::parse_unsigned("seeds", s));

  if (auto v = take("run_name")) c.run_name = *v;
  if (auto v = take("output_dir")) c.output_dir = *v;
  count("episodes", c.episodes);
  count("total_steps", c.total_steps);
  real("gamma", c.gamma);
  if (auto v = take("hidden")) {
    c.hidden.clear();
    if (*v != "none") {
      for (const auto& h : detail::split_list(*v)) c.hidden.push_back(detail::parse_unsigned("hidden", h));
    }
  }
  if (auto v = take("nonlinearity")) {
    if (*v == "rectifier") c.nonlinearity = Nonlinearity::rectifier;
    else if (*v == "tanh") c.nonlinearity = Nonlinearity::hyperbolic_tangent;
    else if (*v == "identity") c.nonlinearity = Nonlinearity::identity;
    else throw ValidationError("nonlinearity", "unknown nonlinearity '" + *v + "'");
  }
  if (auto v = take("optimizer")) {
    if (*v == "adaptive") c.optimizer = OptimizerMode::adaptive;
    else if (*v == "plain") c.optimizer = OptimizerMode::plain;
    else throw ValidationError("optimizer", "expected adaptive or plain");
  }
  real("learning_rate", c.learning_rate);
  real("epsilon_start", c.epsilon_start);
  real("epsilon_end", c.epsilon_end);
  real("epsilon_decay_fraction", c.epsilon_decay_fraction);
  count("batch_size", c.batch_size);
  count("replay_capacity", c.replay_capacity);
  count("target_sync", c.target_sync);
  count("learning_starts", c.learning_starts);
  if (auto v = take("candidates")) {
    if (*v == "standard") c.candidates = CandidateSpec::standard;
    else if (*v == "basis") c.candidates = CandidateSpec::basis;
    else if (*v == "uniform") c.candidates = CandidateSpec::uniform;
    else throw ValidationError("candidates", "expected standard, basis or uniform");
  }
  count("n_step", c.n_step);
  real("entropy_beta", c.entropy_beta);
  real("lr_policy", c.lr_policy);
  real("lr_needs", c.lr_needs);
  real("lr_value", c.lr_value);
  if (auto v = take("uniform_needs_init")) c.uniform_needs_init = detail::parse_bool("uniform_needs_init", *v);
  if (auto v = take("fixed_weights")) {
    std::vector<double> w;
    for (const auto& x : detail::split_list(*v)) w.push_back(detail::parse_real("fixed_weights", x));
    c.fixed_weights = std::move(w);
  }

  if (!kv.empty()) {
    const auto& [key, where] = *kv.begin();
    throw ConfigSyntaxError(where.second, "unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

inline std::string serialize(const ExperimentConfig& c) {
  using detail::format_real;
  std::ostringstream out;
  auto list = [](const auto& xs, auto fmt) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
    return s;
  };
  auto integer = [](auto x) { return std::to_string(x); };
  out << "algorithm = " << to_string(c.algorithm) << '\n';
  out << "scenario = " << to_string(c.scenario) << '\n';
  out << "seeds = " << list(c.seeds, integer) << '\n';
  if (!c.run_name.empty()) out << "run_name = " << c.run_name << '\n';
  out << "output_dir = " << c.output_dir << '\n';
  out << "episodes = " << c.episodes << '\n';
  out << "total_steps = " << c.total_steps << '\n';
  out << "gamma = " << format_real(c.gamma) << '\n';
  out << "hidden = " << (c.hidden.empty() ? std::string("none") : list(c.hidden, integer)) << '\n';
  out << "nonlinearity = " << to_string(c.nonlinearity) << '\n';
  out << "optimizer = " << (c.optimizer == OptimizerMode::adaptive ? "adaptive" : "plain") << '\n';
  out << "learning_rate = " << format_real(c.learning_rate) << '\n';
  out << "epsilon_start = " << format_real(c.epsilon_start) << '\n';
  out << "epsilon_end = " << format_real(c.epsilon_end) << '\n';
  out << "epsilon_decay_fraction = " << format_real(c.epsilon_decay_fraction) << '\n';
  out << "batch_size = " << c.batch_size << '\n';
  out << "replay_capacity = " << c.replay_capacity << '\n';
  out << "target_sync = " << c.target_sync << '\n';
  out << "learning_starts = " << c.learning_starts << '\n';
  out << "candidates = " << to_string(c.candidates) << '\n';
  out << "n_step = " << c.n_step << '\n';
  out << "entropy_beta = " << format_real(c.entropy_beta) << '\n';
  out << "lr_policy = " << format_real(c.lr_policy) << '\n';
  out << "lr_needs = " << format_real(c.lr_needs) << '\n';
  out << "lr_value = " << format_real(c.lr_value) << '\n';
  out << "uniform_needs_init = " << (c.uniform_needs_init ? "true" : "false") << '\n';
  if (c.fixed_weights) out << "fixed_weights = " << list(*c.fixed_weights, format_real) << '\n';
  return out.str();
}

}  // namespace ivrl::harness
