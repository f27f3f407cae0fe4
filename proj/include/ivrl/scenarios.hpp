#pragma once

#include <memory>

#include "ivrl/grid_env.hpp"
#include "ivrl/tabular_mdp.hpp"

namespace ivrl {

inline std::unique_ptr<Environment> make_env(const ScenarioConfig& config) {
  if (config.id == ScenarioId::chain_oracle) {
    if (config.action_count != 2) throw std::invalid_argument("chain-oracle has 2 actions");
    return std::make_unique<TabularMdpEnv>(chain_oracle_mdp(), config.episode_cap, config.seed);
  }
  return std::make_unique<GridEnv>(config);
}

inline std::unique_ptr<Environment> make_env(ScenarioId id, std::uint64_t seed = 0) {
  return make_env(ScenarioConfig::defaults(id, seed));
}

}  // namespace ivrl
