#pragma once

#include <cstddef>

#include "rpf/env/types.hpp"

namespace rpf::env {

struct HeuristicParams {
  IdmParams idm = [] {
    IdmParams p;
    p.time_headway = 2.5;
    return p;
  }();
  double hard_brake_below = -2.5;  // IDM accelerations under this map to hard braking
};

/// Rule-based ego driver: the surrounding-vehicle IDM and overtaking rule
/// applied to the ego, with the IDM acceleration quantized onto the action
/// set (-4 below hard_brake_below, otherwise the nearest of -1, 0, +1).
std::size_t heuristic_driver_policy(const TrafficState& state, const EnvParams& env,
                                    const HeuristicParams& params = {});

}  // namespace rpf::env
