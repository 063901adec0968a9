#pragma once

#include "rpf/env/types.hpp"
#include "rpf/types.hpp"

namespace rpf::env {

/// Ego lane, speed and lateral motion followed by one block per vehicle
/// within sensor range: relative position, lateral offset, relative speed
/// and lateral motion, each scaled into [-1, 1].
Observation observe(const TrafficState& state, const EnvParams& params);

}  // namespace rpf::env
