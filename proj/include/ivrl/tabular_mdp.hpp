#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivrl/env.hpp"
#include "ivrl/rng.hpp"

namespace ivrl {

// Explicit finite MDP with vector-valued utilities U[s][a][k].
class TabularMdp {
 public:
  TabularMdp(std::size_t states, std::size_t actions, std::size_t channels)
      : states_(states),
        actions_(actions),
        channels_(channels),
        transitions_(states * actions * states, 0.0),
        utilities_(states * actions * channels, 0.0),
        terminal_(states, false) {
    if (states == 0 || actions == 0 || channels == 0) throw std::invalid_argument("TabularMdp: empty dimension");
  }

  std::size_t state_count() const { return states_; }
  std::size_t action_count() const { return actions_; }
  std::size_t channel_count() const { return channels_; }

  double& transition(std::size_t s, std::size_t a, std::size_t next) {
    return transitions_.at((s * actions_ + a) * states_ + next);
  }
  double transition(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions_.at((s * actions_ + a) * states_ + next);
  }
  double& utility(std::size_t s, std::size_t a, std::size_t k) { return utilities_.at((s * actions_ + a) * channels_ + k); }
  double utility(std::size_t s, std::size_t a, std::size_t k) const {
    return utilities_.at((s * actions_ + a) * channels_ + k);
  }
  std::vector<double> utilities(std::size_t s, std::size_t a) const {
    const auto begin = utilities_.begin() + static_cast<std::ptrdiff_t>((s * actions_ + a) * channels_);
    return {begin, begin + static_cast<std::ptrdiff_t>(channels_)};
  }

  bool terminal(std::size_t s) const { return terminal_.at(s); }
  void set_terminal(std::size_t s, bool t = true) { terminal_.at(s) = t; }

  // Checks that every P[s][a] row sums to 1 within tol.
  void validate(double tol = 1e-12) const {
    for (std::size_t s = 0; s < states_; ++s) {
      for (std::size_t a = 0; a < actions_; ++a) {
        double total = 0.0;
        for (std::size_t n = 0; n < states_; ++n) {
          const double p = transition(s, a, n);
          if (p < 0.0 || !std::isfinite(p)) throw std::invalid_argument("TabularMdp: invalid probability");
          total += p;
        }
        if (std::abs(total - 1.0) > tol) {
          throw std::invalid_argument("TabularMdp: row (" + std::to_string(s) + ", " + std::to_string(a) +
                                      ") sums to " + std::to_string(total));
        }
      }
    }
  }

 private:
  std::size_t states_;
  std::size_t actions_;
  std::size_t channels_;
  std::vector<double> transitions_;
  std::vector<double> utilities_;
  std::vector<bool> terminal_;
};

// Five-state chain with two actions and two utility channels
// (0 = progress, 1 = comfort). State 4 is terminal and absorbing with zero
// utilities, so entering it ends the return.
//   advance: s -> s+1 w.p. 0.7, stay w.p. 0.3;  U = [0.2 (s+1), -0.3]
//   rest:    stay w.p. 0.6, s-1 w.p. 0.2, s+1 w.p. 0.2 (s-1 clamps at 0);  U = [0, 0.4]
inline TabularMdp chain_oracle_mdp() {
  constexpr std::size_t kStates = 5;
  constexpr std::size_t kTerminal = 4;
  TabularMdp mdp(kStates, 2, 2);
  for (std::size_t s = 0; s < kStates; ++s) {
    if (s == kTerminal) {
      mdp.transition(s, 0, s) = 1.0;
      mdp.transition(s, 1, s) = 1.0;
      continue;
    }
    mdp.transition(s, 0, s + 1) += 0.7;
    mdp.transition(s, 0, s) += 0.3;
    mdp.utility(s, 0, 0) = 0.2 * static_cast<double>(s + 1);
    mdp.utility(s, 0, 1) = -0.3;

    mdp.transition(s, 1, s) += 0.6;
    mdp.transition(s, 1, s == 0 ? 0 : s - 1) += 0.2;
    mdp.transition(s, 1, s + 1) += 0.2;
    mdp.utility(s, 1, 0) = 0.0;
    mdp.utility(s, 1, 1) = 0.4;
  }
  mdp.set_terminal(kTerminal);
  mdp.validate();
  return mdp;
}

// Episodic wrapper: one-hot observations, episodes start uniformly over
// non-terminal states and end on a terminal state or the step cap.
class TabularMdpEnv final : public Environment {
 public:
  TabularMdpEnv(TabularMdp mdp, std::size_t episode_cap, std::uint64_t seed = 0) : mdp_(std::move(mdp)), cap_(episode_cap) {
    mdp_.validate();
    if (cap_ == 0) throw std::invalid_argument("episode cap must be positive");
    for (std::size_t s = 0; s < mdp_.state_count(); ++s) {
      if (!mdp_.terminal(s)) starts_.push_back(s);
    }
    if (starts_.empty()) throw std::invalid_argument("TabularMdpEnv: every state is terminal");
    labels_.reserve(mdp_.channel_count());
    for (std::size_t k = 0; k < mdp_.channel_count(); ++k) labels_.push_back("channel_" + std::to_string(k));
    reset(seed);
  }

  const TabularMdp& mdp() const { return mdp_; }
  std::size_t state() const { return state_; }

  std::size_t observation_size() const override { return mdp_.state_count(); }
  std::size_t action_count() const override { return mdp_.action_count(); }
  std::size_t channel_count() const override { return mdp_.channel_count(); }
  const std::vector<std::string>& channel_labels() const override { return labels_; }
  std::size_t episode_cap() const override { return cap_; }

  Observation reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    state_ = starts_[rng_.uniform_int(starts_.size())];
    tick_ = 0;
    done_ = false;
    return observe();
  }

  StepOutcome step(std::size_t action) override {
    if (action >= mdp_.action_count()) throw std::out_of_range("action outside the MDP's action set");
    if (done_) throw StepAfterDone();
    StepOutcome out;
    out.utilities.values = mdp_.utilities(state_, action);
    const double draw = rng_.uniform();
    double cumulative = 0.0;
    std::size_t next = mdp_.state_count() - 1;
    for (std::size_t s = 0; s < mdp_.state_count(); ++s) {
      cumulative += mdp_.transition(state_, action, s);
      if (draw < cumulative) {
        next = s;
        break;
      }
    }
    state_ = next;
    ++tick_;
    done_ = mdp_.terminal(state_) || tick_ >= cap_;
    out.truncated = done_ && !mdp_.terminal(state_);
    out.next_obs = observe();
    out.done = done_;
    out.info.survival_ticks = tick_;
    return out;
  }

  // True when the episode ended by reaching a terminal state (not the cap).
  bool terminal() const { return mdp_.terminal(state_); }

  bool done() const override { return done_; }

  Observation observe() const override {
    Observation obs(mdp_.state_count(), 0.0);
    obs[state_] = 1.0;
    return obs;
  }

  std::string render() const override {
    std::string out;
    for (std::size_t s = 0; s < mdp_.state_count(); ++s) {
      out.push_back(s == state_ ? 'A' : (mdp_.terminal(s) ? 'T' : '.'));
    }
    out.push_back('\n');
    return out;
  }

 private:
  TabularMdp mdp_;
  std::size_t cap_;
  Rng rng_;
  std::vector<std::size_t> starts_;
  std::vector<std::string> labels_;
  std::size_t state_ = 0;
  std::size_t tick_ = 0;
  bool done_ = false;
};

}  // namespace ivrl
