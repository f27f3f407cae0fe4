#pragma once

// Innate-values DQN. The Q head scores every (action, weight candidate) pair;
// the agent picks both jointly, scalarizes the step's utilities with the
// chosen weights, and regresses the chosen entry onto a frozen-target TD
// target that maximizes over the whole action x weight table.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ivrl/approx.hpp"
#include "ivrl/env.hpp"
#include "ivrl/episode.hpp"
#include "ivrl/innate_values.hpp"
#include "ivrl/rng.hpp"

namespace ivrl {

class WeightCandidateSet {
 public:
  explicit WeightCandidateSet(std::vector<NeedsWeights> candidates) : candidates_(std::move(candidates)) {
    if (candidates_.empty()) throw std::invalid_argument("WeightCandidateSet: empty");
    const std::size_t k = candidates_.front().size();
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
      if (candidates_[i].size() != k) throw std::invalid_argument("WeightCandidateSet: mixed channel counts");
      for (std::size_t j = 0; j < i; ++j) {
        if (candidates_[i] == candidates_[j]) {
          throw std::invalid_argument("WeightCandidateSet: duplicate candidate " + std::to_string(i));
        }
      }
    }
  }

  // {uniform} + {basis vectors} + {all pairwise 50/50 mixes}; 11 members for K = 4.
  static WeightCandidateSet standard(std::size_t k) {
    std::vector<NeedsWeights> c;
    c.push_back(NeedsWeights::uniform(k));
    if (k > 1) {
      for (std::size_t i = 0; i < k; ++i) c.push_back(NeedsWeights::basis(k, i));
    }
    // With two channels the only 50/50 mix is the uniform vector itself.
    if (k > 2) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
          std::vector<double> w(k, 0.0);
          w[i] = w[j] = 0.5;
          c.emplace_back(std::move(w));
        }
      }
    }
    return WeightCandidateSet(std::move(c));
  }

  static WeightCandidateSet singleton(NeedsWeights w) { return WeightCandidateSet({std::move(w)}); }

  std::size_t size() const { return candidates_.size(); }
  std::size_t channel_count() const { return candidates_.front().size(); }
  const NeedsWeights& operator[](std::size_t i) const { return candidates_.at(i); }
  const std::vector<NeedsWeights>& candidates() const { return candidates_; }

 private:
  std::vector<NeedsWeights> candidates_;
};

struct Transition {
  Observation obs;
  std::size_t weight_id = 0;
  std::size_t action = 0;
  double reward = 0.0;
  UtilityVector utilities;
  Observation next_obs;
  bool done = false;  // true terminal only; cap truncation still bootstraps
};

inline constexpr double kRewardConsistencyTolerance = 1e-12;

// Fixed-capacity FIFO replay memory.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, WeightCandidateSet candidates)
      : capacity_(capacity), candidates_(std::move(candidates)) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    ring_.reserve(std::min<std::size_t>(capacity_, 4096));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return ring_.size(); }
  std::uint64_t insertions() const { return insertions_; }

  void push(Transition t) {
    if (t.weight_id >= candidates_.size()) throw std::invalid_argument("ReplayBuffer: weight id out of range");
    const double expected = compose_reward(t.utilities, candidates_[t.weight_id]);
    if (std::abs(t.reward - expected) > kRewardConsistencyTolerance) {
      throw std::invalid_argument("ReplayBuffer: stored reward " + std::to_string(t.reward) +
                                  " differs from w.u = " + std::to_string(expected));
    }
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(t));
    } else {
      ring_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
    ++insertions_;
  }

  // Oldest first.
  const Transition& at(std::size_t i) const {
    if (i >= ring_.size()) throw std::out_of_range("ReplayBuffer: index out of range");
    return ring_[(head_ + i) % ring_.size()];
  }

  // Uniform with replacement over the current contents.
  std::vector<const Transition*> sample(std::size_t batch_size, Rng& rng) const {
    if (batch_size == 0) throw std::invalid_argument("ReplayBuffer: batch size must be positive");
    if (ring_.size() < batch_size) {
      throw std::length_error("ReplayBuffer: " + std::to_string(ring_.size()) + " transitions, batch needs " +
                              std::to_string(batch_size));
    }
    std::vector<const Transition*> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(&ring_[rng.uniform_int(ring_.size())]);
    return batch;
  }

 private:
  std::size_t capacity_;
  WeightCandidateSet candidates_;
  std::vector<Transition> ring_;
  std::size_t head_ = 0;
  std::uint64_t insertions_ = 0;
};

// Approximator read as a row-major actions x weights table.
class QHead {
 public:
  QHead(Approximator net, std::size_t actions, std::size_t weights)
      : net_(std::move(net)), actions_(actions), weights_(weights) {
    if (net_.output_size() != actions_ * weights_) {
      throw std::invalid_argument("QHead: output width " + std::to_string(net_.output_size()) + " != A*W = " +
                                  std::to_string(actions_ * weights_));
    }
  }

  static QHead create(std::size_t obs_size, std::vector<std::size_t> hidden, std::size_t actions, std::size_t weights,
                      Nonlinearity nonlinearity, std::uint64_t seed) {
    std::vector<std::size_t> sizes{obs_size};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(actions * weights);
    return QHead(Approximator::create(std::move(sizes), nonlinearity, seed), actions, weights);
  }

  std::size_t action_count() const { return actions_; }
  std::size_t weight_count() const { return weights_; }
  std::size_t index(std::size_t action, std::size_t weight) const { return action * weights_ + weight; }

  Approximator& net() { return net_; }
  const Approximator& net() const { return net_; }

  std::span<const double> table(std::span<const double> obs) { return net_.forward(obs); }

 private:
  Approximator net_;
  std::size_t actions_;
  std::size_t weights_;
};

struct NeedsBehavior {
  std::size_t action = 0;
  std::size_t weight_id = 0;
  bool operator==(const NeedsBehavior&) const = default;
};

// Joint argmax; ties go to the lowest (action, weight) index.
inline NeedsBehavior greedy_pair(std::span<const double> table, std::size_t weights) {
  if (table.empty() || weights == 0) throw std::invalid_argument("greedy_pair: empty table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i] > table[best]) best = i;
  }
  return {best / weights, best % weights};
}

inline double table_max(std::span<const double> table) {
  double m = table.front();
  for (double v : table) {
    if (!std::isfinite(v)) throw std::domain_error("Q head produced a non-finite value");
    m = std::max(m, v);
  }
  return m;
}

// One uniform draw decides exploration; exploring draws a second uniform
// index over the full A x W table.
inline NeedsBehavior select_needs_behavior(QHead& q, std::span<const double> obs, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("select_needs_behavior: epsilon outside [0, 1]");
  if (rng.uniform() < epsilon) {
    const auto idx = rng.uniform_int(q.action_count() * q.weight_count());
    return {idx / q.weight_count(), idx % q.weight_count()};
  }
  return greedy_pair(q.table(obs), q.weight_count());
}

// y = r for terminal transitions, else r + gamma * max over the whole table
// at next_obs under `target`.
inline std::vector<double> td_targets(std::span<const Transition* const> batch, QHead& target, double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
  check_discount(gamma);
  std::vector<double> y;
  y.reserve(batch.size());
  for (const Transition* t : batch) {
    if (t->done) {
      y.push_back(t->reward);
    } else {
      y.push_back(t->reward + gamma * table_max(target.table(t->next_obs)));
    }
  }
  return y;
}

// Mean squared TD error over the batch with the targets held fixed. Only the
// output entry indexed by each transition's (action, weight_id) receives
// gradient.
inline LossAndGradients dqn_batch_loss(QHead& q, std::span<const Transition* const> batch,
                                       std::span<const double> targets) {
  if (batch.size() != targets.size()) throw std::invalid_argument("dqn_batch_loss: batch/target size mismatch");
  LossAndGradients out{0.0, ParamGradients(q.net().layer_sizes())};
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> output_grad(q.net().output_size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    const std::size_t idx = q.index(t.action, t.weight_id);
    const double prediction = q.table(t.obs)[idx];
    const double residual = prediction - targets[i];
    out.loss += residual * residual * scale;
    output_grad[idx] = 2.0 * residual * scale;
    q.net().accumulate_backward(output_grad, out.grads);
    output_grad[idx] = 0.0;
  }
  if (!std::isfinite(out.loss)) throw std::domain_error("dqn_batch_loss: non-finite loss");
  return out;
}

// Samples a minibatch, takes one optimizer step, returns the pre-update loss.
inline double dqn_train_step(QHead& q, QHead& target, const ReplayBuffer& buffer, std::size_t batch_size, double gamma,
                             OptimizerState& opt, Rng& rng) {
  const auto batch = buffer.sample(batch_size, rng);
  const auto y = td_targets(batch, target, gamma);
  auto [loss, grads] = dqn_batch_loss(q, batch, y);
  apply_update(q.net(), grads, opt);
  return loss;
}

struct DqnSettings {
  std::vector<std::size_t> hidden = {64};
  Nonlinearity nonlinearity = Nonlinearity::rectifier;
  double gamma = 0.99;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 100000;
  OptimizerMode optimizer = OptimizerMode::adaptive;
  double learning_rate = 1e-3;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.1;
  std::size_t total_steps = 50000;
  std::size_t target_sync = 500;
  std::size_t learning_starts = 0;  // 0 means "as soon as one batch fits"
};

// Linear decay from start to end over the first decay_fraction of the budget.
inline double epsilon_at(std::size_t step, const DqnSettings& s) {
  const double horizon = s.epsilon_decay_fraction * static_cast<double>(s.total_steps);
  if (horizon <= 0.0) return s.epsilon_end;
  const double frac = std::min(1.0, static_cast<double>(step) / horizon);
  return s.epsilon_start + frac * (s.epsilon_end - s.epsilon_start);
}

class DqnAgent {
 public:
  DqnAgent(std::size_t obs_size, std::size_t actions, WeightCandidateSet candidates, DqnSettings settings,
           std::uint64_t seed)
      : settings_(std::move(settings)),
        candidates_(std::move(candidates)),
        q_(QHead::create(obs_size, settings_.hidden, actions, candidates_.size(), settings_.nonlinearity,
                         derive_seed(seed, 0))),
        target_(q_),
        buffer_(settings_.buffer_capacity, candidates_),
        act_rng_(derive_seed(seed, 1)),
        replay_rng_(derive_seed(seed, 2)) {
    check_discount(settings_.gamma);
    if (settings_.batch_size == 0 || settings_.target_sync == 0) {
      throw std::invalid_argument("DqnAgent: batch size and target sync must be positive");
    }
    opt_.mode = settings_.optimizer;
    opt_.learning_rate = settings_.learning_rate;
  }

  const DqnSettings& settings() const { return settings_; }
  const WeightCandidateSet& candidates() const { return candidates_; }
  QHead& q() { return q_; }
  QHead& target() { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::size_t steps() const { return steps_; }
  bool budget_exhausted() const { return steps_ >= settings_.total_steps; }

  // Losses of every gradient step so far, in order.
  const std::vector<double>& step_losses() const { return step_losses_; }

  // Acts and learns for one episode (or until the step budget runs out).
  EpisodeSummary run_episode(Environment& env, std::uint64_t env_seed) {
    EpisodeSummary summary;
    const std::size_t k = candidates_.channel_count();
    if (env.channel_count() != k) throw std::invalid_argument("DqnAgent: environment/candidate channel mismatch");
    summary.utility_sums.assign(k, 0.0);
    summary.weights.assign(k, 0.0);
    std::size_t train_steps = 0;
    double loss_total = 0.0;

    Observation obs = env.reset(env_seed);
    while (!env.done() && !budget_exhausted()) {
      const double eps = epsilon_at(steps_, settings_);
      const NeedsBehavior choice = select_needs_behavior(q_, obs, eps, act_rng_);
      StepOutcome outcome = env.step(choice.action);
      const NeedsWeights& w = candidates_[choice.weight_id];
      const double reward = compose_reward(outcome.utilities, w);

      for (std::size_t c = 0; c < k; ++c) {
        summary.utility_sums[c] += outcome.utilities[c];
        summary.weights[c] += w[c];
      }
      summary.reward_sum += reward;
      ++summary.length;
      summary.info = outcome.info;

      Transition t{obs, choice.weight_id, choice.action, reward, outcome.utilities, outcome.next_obs,
                   outcome.done && !outcome.truncated};
      buffer_.push(std::move(t));
      obs = std::move(outcome.next_obs);

      const std::size_t warmup = std::max(settings_.batch_size, settings_.learning_starts);
      if (buffer_.size() >= warmup) {
        const double loss = dqn_train_step(q_, target_, buffer_, settings_.batch_size, settings_.gamma, opt_, replay_rng_);
        step_losses_.push_back(loss);
        loss_total += loss;
        ++train_steps;
      }
      ++steps_;
      if (steps_ % settings_.target_sync == 0) target_ = q_;
    }
    if (summary.length > 0) {
      for (auto& v : summary.weights) v /= static_cast<double>(summary.length);
    } else {
      summary.weights.assign(candidates_[0].values().begin(), candidates_[0].values().end());
    }
    summary.loss_q = train_steps > 0 ? loss_total / static_cast<double>(train_steps) : 0.0;
    return summary;
  }

 private:
  DqnSettings settings_;
  WeightCandidateSet candidates_;
  QHead q_;
  QHead target_;
  ReplayBuffer buffer_;
  OptimizerState opt_;
  Rng act_rng_;
  Rng replay_rng_;
  std::size_t steps_ = 0;
  std::vector<double> step_losses_;
};

}  // namespace ivrl
