#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivrl/innate_values.hpp"

namespace ivrl {

using Observation = std::vector<double>;

// Task-native diagnostics, comparable across agents whatever their weights.
struct StepInfo {
  std::size_t survival_ticks = 0;
  std::size_t total_kills = 0;
  double task_score = 0.0;
};

struct StepOutcome {
  UtilityVector utilities;
  Observation next_obs;
  bool done = false;
  // Ended only because the episode cap was hit; learners still bootstrap.
  bool truncated = false;
  StepInfo info;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t observation_size() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual std::size_t channel_count() const = 0;
  virtual const std::vector<std::string>& channel_labels() const = 0;
  virtual std::size_t episode_cap() const = 0;

  virtual Observation reset(std::uint64_t seed) = 0;
  virtual StepOutcome step(std::size_t action) = 0;
  virtual bool done() const = 0;
  virtual Observation observe() const = 0;

  // One character per cell.
  virtual std::string render() const = 0;
};

class StepAfterDone : public std::logic_error {
 public:
  StepAfterDone() : std::logic_error("step called on a finished episode; reset first") {}
};

}  // namespace ivrl
