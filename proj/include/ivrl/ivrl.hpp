#pragma once

#include "ivrl/a2c.hpp"
#include "ivrl/approx.hpp"
#include "ivrl/dqn.hpp"
#include "ivrl/env.hpp"
#include "ivrl/episode.hpp"
#include "ivrl/grid_env.hpp"
#include "ivrl/innate_values.hpp"
#include "ivrl/rng.hpp"
#include "ivrl/scenarios.hpp"
#include "ivrl/tabular_mdp.hpp"
