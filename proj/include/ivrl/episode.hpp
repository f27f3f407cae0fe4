#pragma once

#include <cstddef>
#include <vector>

#include "ivrl/env.hpp"

namespace ivrl {

// What one training episode reports back to the harness.
struct EpisodeSummary {
  std::size_t length = 0;
  std::vector<double> utility_sums;
  double reward_sum = 0.0;
  std::vector<double> weights;  // on the K-simplex
  double loss_q = 0.0;
  double loss_policy = 0.0;
  double loss_needs = 0.0;
  double loss_value = 0.0;
  StepInfo info;
};

}  // namespace ivrl
