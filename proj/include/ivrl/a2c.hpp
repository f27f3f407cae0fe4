#pragma once

// Innate-values advantage actor-critic. Three networks: a policy over
// actions, a needs network whose softmax output is the weight vector w_t
// used to scalarize utilities, and a state-value baseline. Each episode is
// rolled out once, N-step returns and advantages are formed, and the three
// losses are differentiated against the pre-update parameters before any of
// the three optimizer steps is applied.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ivrl/approx.hpp"
#include "ivrl/env.hpp"
#include "ivrl/episode.hpp"
#include "ivrl/innate_values.hpp"
#include "ivrl/rng.hpp"

namespace ivrl {

inline constexpr double kProbabilityFloor = 1e-8;

struct A2cSettings {
  std::vector<std::size_t> hidden = {64};
  Nonlinearity nonlinearity = Nonlinearity::rectifier;
  double gamma = 0.99;
  std::size_t n_step = 5;
  double entropy_beta = 0.01;
  double lr_policy = 1e-3;
  double lr_needs = 1e-3;
  double lr_value = 1e-3;
  OptimizerMode optimizer = OptimizerMode::adaptive;
  std::size_t max_episode_steps = 0;  // 0 = environment cap
  // Zero the needs head so w starts at exactly uniform.
  bool uniform_needs_init = false;
  // Baseline mode: weights are this constant and the needs net is unused.
  std::optional<NeedsWeights> fixed_needs;
};

struct ActorCriticHeads {
  Approximator policy;
  Approximator needs;
  Approximator value;
  std::optional<NeedsWeights> fixed_needs;

  static ActorCriticHeads create(std::size_t obs_size, std::size_t actions, std::size_t channels,
                                 const A2cSettings& s, std::uint64_t seed) {
    auto sizes = [&](std::size_t out) {
      std::vector<std::size_t> v{obs_size};
      v.insert(v.end(), s.hidden.begin(), s.hidden.end());
      v.push_back(out);
      return v;
    };
    ActorCriticHeads h{Approximator::create(sizes(actions), s.nonlinearity, derive_seed(seed, 10)),
                       Approximator::create(sizes(channels), s.nonlinearity, derive_seed(seed, 11)),
                       Approximator::create(sizes(1), s.nonlinearity, derive_seed(seed, 12)), s.fixed_needs};
    if (s.uniform_needs_init) h.needs.zero_output_layer();
    if (h.fixed_needs && h.fixed_needs->size() != channels) {
      throw std::invalid_argument("ActorCriticHeads: fixed weight vector has the wrong channel count");
    }
    return h;
  }

  std::vector<double> action_probs(std::span<const double> obs) { return softmax(policy.forward(obs)); }

  std::vector<double> weights(std::span<const double> obs) {
    if (fixed_needs) return {fixed_needs->values().begin(), fixed_needs->values().end()};
    return softmax(needs.forward(obs));
  }

  double state_value(std::span<const double> obs) { return value.forward(obs)[0]; }
};

struct EpisodeTrace {
  std::vector<Observation> observations;
  std::vector<std::size_t> actions;
  std::vector<double> action_probs;
  std::vector<std::vector<double>> weights;
  std::vector<UtilityVector> utilities;
  std::vector<double> rewards;
  std::vector<double> values;
  StepInfo info;

  std::size_t length() const { return actions.size(); }
};

inline std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  const double draw = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (draw < cumulative) return i;
  }
  return probs.size() - 1;
}

// Runs the current policy from the environment's present (freshly reset)
// state until done or max_steps. Each step consumes exactly one draw of rng.
inline EpisodeTrace rollout(Environment& env, ActorCriticHeads& heads, Rng& rng, std::size_t max_steps) {
  if (env.done()) throw std::logic_error("rollout: environment must be reset first");
  EpisodeTrace trace;
  Observation obs = env.observe();
  for (std::size_t t = 0; t < max_steps && !env.done(); ++t) {
    const auto w = heads.weights(obs);
    const auto probs = heads.action_probs(obs);
    const std::size_t action = sample_categorical(probs, rng);
    const double value = heads.state_value(obs);
    StepOutcome outcome = env.step(action);

    trace.rewards.push_back(compose_reward(outcome.utilities.values, w));
    trace.observations.push_back(std::move(obs));
    trace.actions.push_back(action);
    trace.action_probs.push_back(probs[action]);
    trace.weights.push_back(w);
    trace.utilities.push_back(std::move(outcome.utilities));
    trace.values.push_back(value);
    trace.info = outcome.info;
    obs = std::move(outcome.next_obs);
  }
  return trace;
}

struct AdvantageVector {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// U_t = N-step innate-value return bootstrapped on V(s_{t+N}) while t + N < T;
// A_t = U_t - V(s_t). Both are plain numbers downstream (no gradient path).
inline AdvantageVector n_step_advantages(const EpisodeTrace& trace, double gamma, std::size_t n_step) {
  const std::size_t T = trace.length();
  if (T == 0) throw std::invalid_argument("n_step_advantages: empty trace");
  if (n_step == 0) throw std::invalid_argument("n_step_advantages: N must be >= 1");
  AdvantageVector adv;
  adv.returns.resize(T);
  adv.advantages.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double bootstrap = t + n_step < T ? trace.values[t + n_step] : 0.0;
    adv.returns[t] = n_step_utility_return(trace.rewards, t, n_step, gamma, bootstrap);
    adv.advantages[t] = adv.returns[t] - trace.values[t];
  }
  return adv;
}

inline void check_aligned(const EpisodeTrace& trace, const AdvantageVector& adv) {
  if (trace.length() == 0 || adv.advantages.size() != trace.length() || adv.returns.size() != trace.length()) {
    throw std::invalid_argument("trace and advantages are not aligned");
  }
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - top);
  const double lse = top + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

// loss = -(1/T) sum_t [A_t log pi(a_t|s_t) + beta H(pi(.|s_t))], with the
// log-probability floored at log(1e-8) (floored terms carry no gradient).
inline LossAndGradients policy_loss_grads(const EpisodeTrace& trace, const AdvantageVector& adv, Approximator& policy,
                                          double entropy_beta) {
  check_aligned(trace, adv);
  const double inv_t = 1.0 / static_cast<double>(trace.length());
  const double log_floor = std::log(kProbabilityFloor);
  LossAndGradients out{0.0, ParamGradients(policy.layer_sizes())};
  std::vector<double> grad(policy.output_size());
  for (std::size_t t = 0; t < trace.length(); ++t) {
    const auto logits = policy.forward(trace.observations[t]);
    const auto logp = log_softmax(logits);
    const std::size_t a = trace.actions[t];
    double entropy = 0.0;
    std::vector<double> p(logp.size());
    for (std::size_t j = 0; j < logp.size(); ++j) {
      p[j] = std::exp(logp[j]);
      entropy -= p[j] * logp[j];
    }
    const bool floored = logp[a] < log_floor;
    const double logp_a = floored ? log_floor : logp[a];
    const double advantage = adv.advantages[t];
    out.loss -= inv_t * (advantage * logp_a + entropy_beta * entropy);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double score = floored ? 0.0 : ((j == a ? 1.0 : 0.0) - p[j]);
      // dH/dz_j = -p_j (log p_j + H)
      const double entropy_slope = -p[j] * (logp[j] + entropy);
      grad[j] = -inv_t * (advantage * score + entropy_beta * entropy_slope);
    }
    policy.accumulate_backward(grad, out.grads);
  }
  return out;
}

// loss = -(1/T) sum_t A_t (u_t . w_t(delta)), w_t the needs-net softmax at s_t.
inline LossAndGradients needs_loss_grads(const EpisodeTrace& trace, const AdvantageVector& adv, Approximator& needs) {
  check_aligned(trace, adv);
  const double inv_t = 1.0 / static_cast<double>(trace.length());
  LossAndGradients out{0.0, ParamGradients(needs.layer_sizes())};
  std::vector<double> grad(needs.output_size());
  for (std::size_t t = 0; t < trace.length(); ++t) {
    const auto w = softmax(needs.forward(trace.observations[t]));
    const auto& u = trace.utilities[t].values;
    if (u.size() != w.size()) throw std::invalid_argument("needs_loss_grads: channel count mismatch");
    double reward = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) reward += u[k] * w[k];
    const double advantage = adv.advantages[t];
    out.loss -= inv_t * advantage * reward;
    for (std::size_t k = 0; k < w.size(); ++k) grad[k] = -inv_t * advantage * w[k] * (u[k] - reward);
    needs.accumulate_backward(grad, out.grads);
  }
  return out;
}

// loss = (1/T) sum_t (U_t - V(s_t))^2 with U_t held fixed.
inline LossAndGradients value_loss_grads(const EpisodeTrace& trace, const AdvantageVector& adv, Approximator& value) {
  check_aligned(trace, adv);
  const double inv_t = 1.0 / static_cast<double>(trace.length());
  LossAndGradients out{0.0, ParamGradients(value.layer_sizes())};
  std::vector<double> grad(1);
  for (std::size_t t = 0; t < trace.length(); ++t) {
    const double v = value.forward(trace.observations[t])[0];
    const double residual = v - adv.returns[t];
    out.loss += inv_t * residual * residual;
    grad[0] = 2.0 * inv_t * residual;
    value.accumulate_backward(grad, out.grads);
  }
  return out;
}

inline OptimizerState make_optimizer(OptimizerMode mode, double lr) {
  return mode == OptimizerMode::plain ? OptimizerState::plain(lr) : OptimizerState::adaptive(lr);
}

class A2cAgent {
 public:
  A2cAgent(std::size_t obs_size, std::size_t actions, std::size_t channels, A2cSettings settings, std::uint64_t seed)
      : settings_(std::move(settings)),
        heads_(ActorCriticHeads::create(obs_size, actions, channels, settings_, seed)),
        opt_policy_(make_optimizer(settings_.optimizer, settings_.lr_policy)),
        opt_needs_(make_optimizer(settings_.optimizer, settings_.lr_needs)),
        opt_value_(make_optimizer(settings_.optimizer, settings_.lr_value)),
        rng_(derive_seed(seed, 13)) {
    check_discount(settings_.gamma);
    if (settings_.n_step == 0) throw std::invalid_argument("A2cAgent: N must be >= 1");
  }

  const A2cSettings& settings() const { return settings_; }
  ActorCriticHeads& heads() { return heads_; }

  // One rollout, one advantage pass, three gradients, then updates in the
  // order policy, needs, value.
  EpisodeSummary train_episode(Environment& env, std::uint64_t env_seed) {
    env.reset(env_seed);
    const std::size_t cap = settings_.max_episode_steps > 0 ? settings_.max_episode_steps : env.episode_cap();
    const EpisodeTrace trace = rollout(env, heads_, rng_, cap);
    const AdvantageVector adv = n_step_advantages(trace, settings_.gamma, settings_.n_step);

    auto policy = policy_loss_grads(trace, adv, heads_.policy, settings_.entropy_beta);
    std::optional<LossAndGradients> needs;
    if (!heads_.fixed_needs) needs = needs_loss_grads(trace, adv, heads_.needs);
    auto value = value_loss_grads(trace, adv, heads_.value);

    apply_update(heads_.policy, policy.grads, opt_policy_);
    if (needs) apply_update(heads_.needs, needs->grads, opt_needs_);
    apply_update(heads_.value, value.grads, opt_value_);

    EpisodeSummary s;
    s.length = trace.length();
    s.utility_sums.assign(env.channel_count(), 0.0);
    for (const auto& u : trace.utilities) {
      for (std::size_t k = 0; k < u.size(); ++k) s.utility_sums[k] += u[k];
    }
    for (double r : trace.rewards) s.reward_sum += r;
    s.weights = trace.weights.back();
    s.loss_policy = policy.loss;
    s.loss_needs = needs ? needs->loss : 0.0;
    s.loss_value = value.loss;
    s.info = trace.info;
    return s;
  }

 private:
  A2cSettings settings_;
  ActorCriticHeads heads_;
  OptimizerState opt_policy_;
  OptimizerState opt_needs_;
  OptimizerState opt_value_;
  Rng rng_;
};

}  // namespace ivrl
