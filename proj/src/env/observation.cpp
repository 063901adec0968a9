#include "rpf/env/observation.hpp"

#include <algorithm>
#include <cmath>

namespace rpf::env {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
double unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

Observation observe(const TrafficState& state, const EnvParams& params) {
  const Vehicle& ego = state.ego();
  const double y_max = params.road.y_max();
  const double range = params.road.sensor_range;
  const double speed_span = params.speed_max - params.speed_min;

  Observation obs;
  obs.values.reserve(kEgoFeatures + kVehicleFeatures * (state.vehicles.size() - 1));
  obs.values.push_back(unit(2.0 * ego.y / y_max - 1.0));
  obs.values.push_back(unit(2.0 * ego.vx / params.ego.max_speed - 1.0));
  obs.values.push_back(sign(ego.vy));
  for (std::size_t i = 1; i < state.vehicles.size(); ++i) {
    const Vehicle& v = state.vehicles[i];
    const double dx = v.x - ego.x;
    if (std::abs(dx) > range) continue;
    obs.values.push_back(unit(dx / range));
    obs.values.push_back(unit((v.y - ego.y) / y_max));
    obs.values.push_back(unit((v.vx - ego.vx) / speed_span));
    obs.values.push_back(sign(v.vy));
  }
  return obs;
}

}  // namespace rpf::env
