#pragma once

#include "fevi/belief.hpp"
#include "fevi/errors.hpp"
#include "fevi/gridworld.hpp"
#include "fevi/io.hpp"
#include "fevi/limits.hpp"
#include "fevi/mdp.hpp"
#include "fevi/numeric.hpp"
#include "fevi/planner.hpp"
#include "fevi/rng.hpp"
#include "fevi/sim.hpp"

namespace fevi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fevi
