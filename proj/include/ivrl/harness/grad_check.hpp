#pragma once

// Analytic gradients against central finite differences on seeded random
// instances: network backward, the IV-DQN batch loss and the three IV-A2C
// losses. Hidden layers use tanh so every sampled point is differentiable.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ivrl/a2c.hpp"
#include "ivrl/approx.hpp"
#include "ivrl/dqn.hpp"
#include "ivrl/rng.hpp"

namespace ivrl::harness {

inline constexpr double kGradCheckTolerance = 1e-4;

struct GradCheckEntry {
  std::string check;
  std::size_t instance = 0;
  std::size_t parameters = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  double tolerance = kGradCheckTolerance;
  std::vector<GradCheckEntry> entries;

  bool passed() const {
    return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
  }
  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_error);
    return w;
  }
  double worst(const std::string& check) const {
    double w = 0.0;
    for (const auto& e : entries) {
      if (e.check == check) w = std::max(w, e.max_rel_error);
    }
    return w;
  }
};

struct GradCheckOptions {
  std::uint64_t seed = 0;
  std::size_t instances_per_check = 12;
  double tolerance = kGradCheckTolerance;
  double step = 1e-5;
  // Applied to each analytic gradient before comparison; tests use it to
  // inject faults.
  std::function<void(const std::string& check, ParamGradients&)> tamper;
};

inline const std::vector<std::string>& grad_check_names() {
  static const std::vector<std::string> names = {"approx-backward", "dqn-batch-loss", "a2c-policy-loss",
                                                 "a2c-needs-loss", "a2c-value-loss"};
  return names;
}

namespace detail {

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline std::size_t random_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform_int(hi - lo + 1));
}

inline std::vector<std::size_t> random_hidden(Rng& rng) {
  std::vector<std::size_t> h(random_between(rng, 1, 2));
  for (auto& w : h) w = random_between(rng, 2, 7);
  return h;
}

inline Approximator random_net(Rng& rng, std::size_t in, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  for (auto w : random_hidden(rng)) sizes.push_back(w);
  sizes.push_back(out);
  return Approximator::create(sizes, Nonlinearity::hyperbolic_tangent, rng.next_u64());
}

struct RandomEpisode {
  EpisodeTrace trace;
  AdvantageVector adv;
};

inline RandomEpisode random_episode(Rng& rng, std::size_t obs_size, std::size_t actions, std::size_t channels) {
  RandomEpisode e;
  const std::size_t T = random_between(rng, 2, 8);
  for (std::size_t t = 0; t < T; ++t) {
    e.trace.observations.push_back(random_vector(rng, obs_size));
    e.trace.actions.push_back(static_cast<std::size_t>(rng.uniform_int(actions)));
    e.trace.utilities.push_back(UtilityVector{random_vector(rng, channels)});
    e.adv.advantages.push_back(rng.uniform(-2.0, 2.0));
    e.adv.returns.push_back(rng.uniform(-2.0, 2.0));
  }
  return e;
}

}  // namespace detail

inline GradCheckReport grad_check_suite(const GradCheckOptions& options = {}) {
  GradCheckReport report;
  report.tolerance = options.tolerance;
  const auto& names = grad_check_names();

  auto record = [&](const std::string& check, std::size_t instance, Approximator& net, ParamGradients analytic,
                    const ScalarObjective& objective) {
    if (options.tamper) options.tamper(check, analytic);
    const ParamGradients numeric = finite_diff_gradient(objective, net, options.step);
    GradCheckEntry e{check, instance, net.parameter_count(), max_relative_error(analytic, numeric), false};
    e.passed = e.max_rel_error < options.tolerance;
    report.entries.push_back(e);
  };

  for (std::size_t c = 0; c < names.size(); ++c) {
    const std::string& check = names[c];
    for (std::size_t i = 0; i < options.instances_per_check; ++i) {
      Rng rng(derive_seed(options.seed, 100 * c + i));
      const std::size_t obs_size = detail::random_between(rng, 2, 6);

      if (check == "approx-backward") {
        Approximator net = detail::random_net(rng, obs_size, detail::random_between(rng, 1, 5));
        const auto input = detail::random_vector(rng, obs_size);
        const auto probe = detail::random_vector(rng, net.output_size());
        net.forward(input);
        auto objective = [&](Approximator& n) {
          const auto out = n.forward(input);
          double s = 0.0;
          for (std::size_t k = 0; k < out.size(); ++k) s += out[k] * probe[k];
          return s;
        };
        record(check, i, net, net.backward(probe), objective);
      } else if (check == "dqn-batch-loss") {
        const std::size_t actions = detail::random_between(rng, 2, 4);
        const std::size_t weights = detail::random_between(rng, 1, 3);
        QHead q(detail::random_net(rng, obs_size, actions * weights), actions, weights);
        std::vector<Transition> storage(detail::random_between(rng, 2, 8));
        std::vector<double> targets;
        for (auto& t : storage) {
          t.obs = detail::random_vector(rng, obs_size);
          t.action = static_cast<std::size_t>(rng.uniform_int(actions));
          t.weight_id = static_cast<std::size_t>(rng.uniform_int(weights));
          targets.push_back(rng.uniform(-2.0, 2.0));
        }
        std::vector<const Transition*> batch;
        for (const auto& t : storage) batch.push_back(&t);
        auto objective = [&](Approximator&) { return dqn_batch_loss(q, batch, targets).loss; };
        record(check, i, q.net(), dqn_batch_loss(q, batch, targets).grads, objective);
      } else {
        const std::size_t actions = detail::random_between(rng, 2, 5);
        const std::size_t channels = detail::random_between(rng, 2, 4);
        const auto episode = detail::random_episode(rng, obs_size, actions, channels);
        if (check == "a2c-policy-loss") {
          Approximator net = detail::random_net(rng, obs_size, actions);
          const double beta = rng.uniform(0.0, 0.1);
          auto objective = [&](Approximator& n) { return policy_loss_grads(episode.trace, episode.adv, n, beta).loss; };
          record(check, i, net, policy_loss_grads(episode.trace, episode.adv, net, beta).grads, objective);
        } else if (check == "a2c-needs-loss") {
          Approximator net = detail::random_net(rng, obs_size, channels);
          auto objective = [&](Approximator& n) { return needs_loss_grads(episode.trace, episode.adv, n).loss; };
          record(check, i, net, needs_loss_grads(episode.trace, episode.adv, net).grads, objective);
        } else {
          Approximator net = detail::random_net(rng, obs_size, 1);
          auto objective = [&](Approximator& n) { return value_loss_grads(episode.trace, episode.adv, n).loss; };
          record(check, i, net, value_loss_grads(episode.trace, episode.adv, net).grads, objective);
        }
      }
    }
  }
  return report;
}

}  // namespace ivrl::harness
