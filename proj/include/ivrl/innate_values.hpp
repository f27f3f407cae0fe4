#pragma once

// Reward kernel: an agent's scalar reward is the needs-weighted sum of the
// utility channels it received on that step.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ivrl {

inline constexpr double kSimplexTolerance = 1e-9;

// Innate-value weighting over K utility channels; always on the K-simplex.
class NeedsWeights {
 public:
  NeedsWeights() = default;

  explicit NeedsWeights(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("NeedsWeights: empty vector");
    double total = 0.0;
    for (double v : w_) {
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("NeedsWeights: entries must be finite and >= 0");
      total += v;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance) {
      throw std::invalid_argument("NeedsWeights: entries sum to " + std::to_string(total) + ", not 1");
    }
  }

  static NeedsWeights uniform(std::size_t k) {
    if (k == 0) throw std::invalid_argument("NeedsWeights: K must be positive");
    return NeedsWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  static NeedsWeights basis(std::size_t k, std::size_t index) {
    std::vector<double> w(k, 0.0);
    w.at(index) = 1.0;
    return NeedsWeights(std::move(w));
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const { return w_; }

  bool operator==(const NeedsWeights&) const = default;

 private:
  std::vector<double> w_;
};

// Per-step utilities emitted by an environment, one entry per channel.
struct UtilityVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const UtilityVector&) const = default;
};

inline bool on_simplex(std::span<const double> w, double tol = kSimplexTolerance) {
  if (w.empty()) return false;
  double total = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tol;
}

// Plain dot product sum_k u_k * w_k, accumulated in channel order.
inline double compose_reward(std::span<const double> u, std::span<const double> w) {
  if (u.size() != w.size()) throw std::invalid_argument("compose_reward: utility/weight length mismatch");
  for (double v : u) {
    if (!std::isfinite(v)) throw std::invalid_argument("compose_reward: non-finite utility");
  }
  if (!on_simplex(w)) throw std::invalid_argument("compose_reward: weights are not on the simplex");
  double r = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) r += u[k] * w[k];
  return r;
}

inline double compose_reward(const UtilityVector& u, const NeedsWeights& w) {
  return compose_reward(std::span<const double>(u.values), w.values());
}

inline void check_discount(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
}

// G_t for every t by the backward recursion G_t = R_t + gamma * G_{t+1}.
inline std::vector<double> discounted_return(std::span<const double> rewards, double gamma) {
  if (rewards.empty()) throw std::invalid_argument("discounted_return: empty reward trace");
  check_discount(gamma);
  std::vector<double> g(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    g[t] = running;
  }
  return g;
}

// gamma^N * bootstrap + sum_{k < N, t + k < T} gamma^k * r_{t+k}, where T is
// rewards.size(). The bootstrap term is dropped once t + N reaches T.
inline double n_step_utility_return(std::span<const double> rewards, std::size_t t, std::size_t horizon, double gamma,
                                    double bootstrap) {
  const std::size_t episode_len = rewards.size();
  if (t >= episode_len) throw std::out_of_range("n_step_utility_return: t outside the episode");
  if (horizon == 0) throw std::invalid_argument("n_step_utility_return: horizon must be >= 1");
  check_discount(gamma);
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t k = 0; k < horizon; ++k) {
    if (t + k < episode_len) total += discount * rewards[t + k];
    discount *= gamma;
  }
  if (t + horizon < episode_len) total += discount * bootstrap;
  return total;
}

}  // namespace ivrl
