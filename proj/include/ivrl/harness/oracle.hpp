#pragma once

// Exact fixed point of the augmented Bellman operator on a tabular MDP:
//   Q(s,w,a) = sum_s' P(s'|s,a) [ w.U(s,a) + gamma * max_{w',a'} Q(s',w',a') ]
// with terminal states contributing only their immediate reward.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ivrl/dqn.hpp"
#include "ivrl/innate_values.hpp"
#include "ivrl/tabular_mdp.hpp"

namespace ivrl::harness {

struct QTable {
  std::size_t states = 0;
  std::size_t weights = 0;
  std::size_t actions = 0;
  std::vector<double> values;  // [s][w][a]
  std::size_t iterations = 0;

  double& at(std::size_t s, std::size_t w, std::size_t a) { return values.at((s * weights + w) * actions + a); }
  double at(std::size_t s, std::size_t w, std::size_t a) const { return values.at((s * weights + w) * actions + a); }

  double state_max(std::size_t s) const {
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(s * weights * actions);
    return *std::max_element(first, first + static_cast<std::ptrdiff_t>(weights * actions));
  }
};

namespace detail {

// One application of the operator; returns the sup-norm change.
inline double bellman_sweep(const TabularMdp& mdp, const WeightCandidateSet& wset, double gamma, const QTable& in,
                            QTable& out) {
  double residual = 0.0;
  std::vector<double> next_max(mdp.state_count());
  for (std::size_t s = 0; s < mdp.state_count(); ++s) next_max[s] = in.state_max(s);
  for (std::size_t s = 0; s < mdp.state_count(); ++s) {
    for (std::size_t w = 0; w < wset.size(); ++w) {
      for (std::size_t a = 0; a < mdp.action_count(); ++a) {
        const double r = compose_reward(mdp.utilities(s, a), wset[w].values());
        double q = r;
        if (!mdp.terminal(s)) {
          double future = 0.0;
          for (std::size_t n = 0; n < mdp.state_count(); ++n) {
            const double p = mdp.transition(s, a, n);
            if (p != 0.0) future += p * next_max[n];
          }
          q += gamma * future;
        }
        residual = std::max(residual, std::abs(q - in.at(s, w, a)));
        out.at(s, w, a) = q;
      }
    }
  }
  return residual;
}

inline QTable empty_table(const TabularMdp& mdp, const WeightCandidateSet& wset) {
  QTable q;
  q.states = mdp.state_count();
  q.weights = wset.size();
  q.actions = mdp.action_count();
  q.values.assign(q.states * q.weights * q.actions, 0.0);
  return q;
}

inline void check_compatible(const TabularMdp& mdp, const WeightCandidateSet& wset) {
  if (wset.channel_count() != mdp.channel_count()) {
    throw std::invalid_argument("value iteration: candidate length differs from the MDP's channel count");
  }
}

}  // namespace detail

// Largest |T Q - Q| over all augmented triples.
inline double bellman_residual(const TabularMdp& mdp, const WeightCandidateSet& wset, double gamma, const QTable& q) {
  detail::check_compatible(mdp, wset);
  QTable scratch = q;
  return detail::bellman_sweep(mdp, wset, gamma, q, scratch);
}

inline QTable value_iteration_oracle(const TabularMdp& mdp, const WeightCandidateSet& wset, double gamma, double tol,
                                     std::size_t min_iterations = 0) {
  check_discount(gamma);
  if (!(tol > 0.0)) throw std::invalid_argument("value iteration: tolerance must be positive");
  detail::check_compatible(mdp, wset);
  mdp.validate();

  QTable q = detail::empty_table(mdp, wset);
  QTable next = q;
  for (std::size_t it = 1;; ++it) {
    const double change = detail::bellman_sweep(mdp, wset, gamma, q, next);
    std::swap(q.values, next.values);
    q.iterations = it;
    // Stop once the fixed point is certified: successive change bounds the
    // residual of the new iterate by gamma * change.
    if (it >= min_iterations && gamma * change < tol && bellman_residual(mdp, wset, gamma, q) < tol) break;
    if (it > 100000) throw std::runtime_error("value iteration did not converge");
  }
  return q;
}

}  // namespace ivrl::harness
