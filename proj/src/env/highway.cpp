#include "rpf/env/highway.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rpf/env/driver_model.hpp"
#include "rpf/env/observation.hpp"
#include "rpf/error.hpp"

namespace rpf::env {

std::size_t action_index(double acceleration, Lateral lateral) {
  for (std::size_t i = 0; i < kActions.size(); ++i) {
    if (kActions[i].acceleration == acceleration && kActions[i].lateral == lateral) return i;
  }
  throw std::invalid_argument("no action with acceleration " + std::to_string(acceleration) +
                              " and the requested lateral command");
}

std::string_view action_name(std::size_t index) {
  static constexpr std::array<std::string_view, kNumActions> kNames{
      "stay_0",  "stay_+1",  "stay_-1",  "left_0", "left_+1",
      "left_-1", "right_0",  "right_+1", "right_-1", "stay_-4"};
  return kNames.at(index);
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kNominal: return "nominal";
    case ScenarioKind::kStoppedVehicle: return "stopped";
    case ScenarioKind::kSpeedingVehicle: return "speeder";
    case ScenarioKind::kOncoming: return "oncoming";
  }
  return "nominal";
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
  if (name == "nominal") return ScenarioKind::kNominal;
  if (name == "stopped" || name == "stopped_vehicle") return ScenarioKind::kStoppedVehicle;
  if (name == "speeder" || name == "speeding_vehicle") return ScenarioKind::kSpeedingVehicle;
  if (name == "oncoming") return ScenarioKind::kOncoming;
  throw ConfigError("unknown scenario kind '" + std::string(name) + "'");
}

void validate(const ScenarioConfig& c) {
  if (c.vehicle_count < 0) throw ConfigError("vehicle count must be >= 0");
  if (!(c.speed_min >= 0.0 && c.speed_min <= c.speed_max)) {
    throw ConfigError("speed range must satisfy 0 <= min <= max");
  }
  if (!(c.ego_speed_min >= 0.0 && c.ego_speed_min <= c.ego_speed_max)) {
    throw ConfigError("ego speed range must satisfy 0 <= min <= max");
  }
  if (!(c.spawn_span > c.spawn_clearance && c.spawn_clearance >= 0.0)) {
    throw ConfigError("spawn span must exceed the spawn clearance");
  }
  switch (c.kind) {
    case ScenarioKind::kNominal: break;
    case ScenarioKind::kStoppedVehicle:
      if (!(c.stopped_distance > 0.0)) throw ConfigError("stopped vehicle must be ahead of the ego");
      if (c.slow_center_vehicles < 0) throw ConfigError("slow vehicle count must be >= 0");
      if (!(c.slow_speed_min > 0.0 && c.slow_speed_min <= c.slow_speed_max)) {
        throw ConfigError("slow vehicle speed range invalid");
      }
      break;
    case ScenarioKind::kSpeedingVehicle:
      if (!(c.speeder_offset < 0.0)) throw ConfigError("speeder must start behind the ego");
      if (!(c.speeder_speed > 0.0)) throw ConfigError("speeder speed must be positive");
      if (!(c.slow_leader_distance > 0.0)) throw ConfigError("slow leader must be ahead of the ego");
      break;
    case ScenarioKind::kOncoming:
      if (!(c.oncoming_speed < 0.0)) throw ConfigError("oncoming vehicle needs a negative speed");
      if (!(c.oncoming_distance > 0.0)) throw ConfigError("oncoming vehicle must start ahead");
      break;
  }
}

namespace {

void start_lane_change(Vehicle& v, int target, const RoadParams& road) {
  v.target_lane = target;
  v.vy = (target > v.lane ? 1.0 : -1.0) * road.lateral_speed();
  v.lane_change_progress = 0.0;
}

bool overlaps(const Vehicle& a, const Vehicle& b) {
  return (a.lane_mask() & b.lane_mask()) != 0 && a.rear() < b.x && b.rear() < a.x;
}

int order(double a, double b) { return a > b ? 1 : (a < b ? -1 : 0); }

// Placement check for reset(): no overlap, surrounding followers would not
// need to brake harder than comfortable, and no initial time-gap violation
// involving the ego.
bool placement_ok(const std::vector<Vehicle>& placed, const Vehicle& cand, const EnvParams& p) {
  for (const Vehicle& other : placed) {
    if ((other.lane_mask() & cand.lane_mask()) == 0) continue;
    if (other.x == cand.x) return false;
    const Vehicle& lead = other.x > cand.x ? other : cand;
    const Vehicle& follow = other.x > cand.x ? cand : other;
    const double gap = lead.rear() - follow.x;
    if (gap < p.idm.min_gap) return false;
    if (lead.is_ego() || follow.is_ego()) {
      if (gap < p.reward.time_gap * follow.vx + p.idm.min_gap) return false;
    }
    if (!follow.is_ego() && follow.driver != Driver::kConstantSpeed) {
      const double a = idm_accel(follow.vx, follow.desired_speed, LeaderInfo{gap, lead.vx}, p.idm);
      if (a < -p.idm.comfort_decel) return false;
    }
  }
  return true;
}

Vehicle make_car(int id, double x, int lane, double speed, double desired, Driver driver,
                 const EnvParams& p) {
  Vehicle v;
  v.id = id;
  v.x = x;
  v.lane = v.target_lane = lane;
  v.y = p.road.lane_center(lane);
  v.vx = speed;
  v.desired_speed = desired;
  v.length = p.car_length;
  v.driver = driver;
  return v;
}

}  // namespace

Vehicle Highway::make_ego(double x, int lane, double speed) const {
  Vehicle ego;
  ego.id = 0;
  ego.x = x;
  ego.lane = ego.target_lane = lane;
  ego.y = params_.road.lane_center(lane);
  ego.vx = speed;
  ego.desired_speed = params_.ego.max_speed;
  ego.length = params_.ego.length;
  ego.driver = Driver::kEgo;
  return ego;
}

TrafficState Highway::reset(const ScenarioConfig& config) const {
  validate(config);
  switch (config.kind) {
    case ScenarioKind::kNominal: return reset_nominal(config);
    case ScenarioKind::kStoppedVehicle: return reset_stopped(config);
    case ScenarioKind::kSpeedingVehicle: return reset_speeding(config);
    case ScenarioKind::kOncoming: return reset_oncoming(config);
  }
  throw ConfigError("unknown scenario kind");
}

TrafficState Highway::reset_nominal(const ScenarioConfig& c) const {
  constexpr int kAttempts = 2000;
  Rng rng(c.seed);
  TrafficState state;
  const int lanes = params_.road.lanes;
  const int ego_lane = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(lanes)));
  state.vehicles.push_back(
      make_ego(c.ego_start, ego_lane, rng.uniform(c.ego_speed_min, c.ego_speed_max)));
  const double ego_desired = state.ego().desired_speed;

  // Slower cars go ahead of the ego, faster ones behind it.
  for (int id = 1; id <= c.vehicle_count; ++id) {
    const double desired = rng.uniform(c.speed_min, c.speed_max);
    const double side = desired < ego_desired ? 1.0 : -1.0;
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      const int lane = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(lanes)));
      const double offset = rng.uniform(c.spawn_clearance, c.spawn_span);
      Vehicle car = make_car(id, c.ego_start + side * offset, lane, desired, desired, Driver::kIdm,
                             params_);
      if (side < 0.0) car.x -= params_.ego.length;
      if (placement_ok(state.vehicles, car, params_)) {
        state.vehicles.push_back(car);
        placed = true;
      }
    }
    if (!placed) {
      throw ConfigError("cannot place " + std::to_string(c.vehicle_count) + " vehicles within " +
                        std::to_string(c.spawn_span) + " m of the ego");
    }
  }
  return state;
}

TrafficState Highway::reset_stopped(const ScenarioConfig& c) const {
  Rng rng(c.seed);
  TrafficState state;
  state.vehicles.push_back(make_ego(c.ego_start, 0, params_.ego.max_speed));
  int id = 1;
  state.vehicles.push_back(make_car(id++, c.ego_start + c.stopped_distance, 0, 0.0, 0.0,
                                    Driver::kConstantSpeed, params_));
  for (int i = 0; i < c.slow_center_vehicles; ++i) {
    const double speed = rng.uniform(c.slow_speed_min, c.slow_speed_max);
    state.vehicles.push_back(make_car(id++, c.ego_start + 30.0 + 45.0 * i, 1, speed, speed,
                                      Driver::kIdmKeepLane, params_));
  }
  return state;
}

TrafficState Highway::reset_speeding(const ScenarioConfig& c) const {
  TrafficState state;
  state.vehicles.push_back(make_ego(c.ego_start, 1, params_.ego.max_speed));
  state.vehicles.push_back(make_car(1, c.ego_start + c.slow_leader_distance, 1,
                                    c.slow_leader_speed, c.slow_leader_speed, Driver::kIdmKeepLane,
                                    params_));
  state.vehicles.push_back(make_car(2, c.ego_start + c.speeder_offset, 2, c.speeder_speed,
                                    c.speeder_speed, Driver::kIdmKeepLane, params_));
  return state;
}

TrafficState Highway::reset_oncoming(const ScenarioConfig& c) const {
  TrafficState state;
  state.vehicles.push_back(make_ego(c.ego_start, 0, params_.ego.max_speed));
  state.vehicles.push_back(make_car(1, c.ego_start + c.oncoming_distance, 0, c.oncoming_speed,
                                    c.oncoming_speed, Driver::kConstantSpeed, params_));
  return state;
}

StepOutcome Highway::step(const TrafficState& state, std::size_t action) const {
  return step(state, kActions.at(action));
}

StepOutcome Highway::step(const TrafficState& state, const EgoAction& action) const {
  if (state.terminated) throw UsageError("step() called on a terminated episode");
  const RoadParams& road = params_.road;
  const double dt = road.time_step;

  StepOutcome out;
  out.next = state;
  auto& vs = out.next.vehicles;
  EventFlags& events = out.events;

  // Lateral commands are ignored while a change is in progress.
  Vehicle& ego = vs.front();
  if (action.lateral != Lateral::kStay && !ego.changing_lanes()) {
    const int target = ego.lane + (action.lateral == Lateral::kLeft ? 1 : -1);
    if (target < 0 || target >= road.lanes) {
      events.off_road = true;
    } else {
      start_lane_change(ego, target, road);
      events.lane_change_initiated = true;
    }
  }

  for (std::size_t i = 1; i < vs.size(); ++i) {
    if (vs[i].driver != Driver::kIdm || vs[i].changing_lanes() || vs[i].x > road.length) continue;
    const Lateral dir = surrounding_lane_change(vs, i, params_);
    if (dir != Lateral::kStay) {
      start_lane_change(vs[i], vs[i].lane + (dir == Lateral::kLeft ? 1 : -1), road);
    }
  }

  std::vector<double> accel(vs.size(), 0.0);
  accel[0] = action.acceleration;
  for (std::size_t i = 1; i < vs.size(); ++i) {
    const Vehicle& v = vs[i];
    if (v.driver == Driver::kConstantSpeed || v.x > road.length) continue;
    const auto leader = find_leader(vs, i, v.lane_mask());
    std::optional<LeaderInfo> info;
    if (leader) info = LeaderInfo{leader->gap, vs[leader->index].vx};
    accel[i] = surrounding_accel(v, info, params_.idm);
    if (leader && leader->index == 0 && accel[i] < -params_.reward.emergency_decel) {
      events.emergency_brake_caused = true;
    }
  }

  for (std::size_t i = 0; i < vs.size(); ++i) {
    Vehicle& v = vs[i];
    if (v.driver != Driver::kConstantSpeed) {
      double speed = v.vx + accel[i] * dt;
      if (v.is_ego()) {
        speed = std::clamp(speed, params_.ego.min_speed, params_.ego.max_speed);
      } else {
        speed = std::max(speed, 0.0);
      }
      v.vx = speed;
    }
    v.x += v.vx * dt;
    if (v.changing_lanes()) {
      v.lane_change_progress += dt;
      v.y += v.vy * dt;
      if (v.lane_change_progress >= road.lane_change_duration - 1e-9) {
        v.lane = v.target_lane;
        v.y = road.lane_center(v.lane);
        v.vy = 0.0;
        v.lane_change_progress = 0.0;
      }
    }
  }
  ++out.next.elapsed_steps;

  const CollisionFlags crash = collision_check(state, out.next);
  events.collision = crash.ego;
  events.other_collisions = crash.others;

  const double ego_speed = vs.front().vx;
  if (const auto leader = find_leader(vs, 0, vs.front().lane_mask())) {
    if (leader->gap < params_.reward.time_gap * ego_speed) events.time_gap_violation = true;
  }
  if (params_.reward.penalize_follower_gap) {
    if (const auto follower = find_follower(vs, 0, vs.front().lane_mask())) {
      const double follower_speed = vs[follower->index].vx;
      if (follower_speed > 0.0 && follower->gap < params_.reward.time_gap * follower_speed) {
        events.time_gap_violation = true;
      }
    }
  }

  out.reward = compute_reward({ego_speed, events.collision, events.off_road,
                               events.emergency_brake_caused, events.time_gap_violation,
                               events.lane_change_initiated},
                              params_.reward);
  out.terminated =
      events.collision || events.off_road || out.next.elapsed_steps >= road.max_steps;
  out.next.terminated = out.terminated;
  return out;
}

Observation Highway::observe(const TrafficState& state) const {
  return env::observe(state, params_);
}

CollisionFlags collision_check(const TrafficState& state) {
  CollisionFlags flags;
  const auto& vs = state.vehicles;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      if (!overlaps(vs[i], vs[j])) continue;
      if (i == 0) {
        flags.ego = true;
      } else {
        ++flags.others;
      }
    }
  }
  return flags;
}

CollisionFlags collision_check(const TrafficState& before, const TrafficState& after) {
  CollisionFlags flags;
  const auto& b = before.vehicles;
  const auto& a = after.vehicles;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      bool hit = overlaps(a[i], a[j]);
      if (!hit) {
        const unsigned mask_i = a[i].lane_mask() | b[i].lane_mask();
        const unsigned mask_j = a[j].lane_mask() | b[j].lane_mask();
        const int was = order(b[i].x, b[j].x);
        const int now = order(a[i].x, a[j].x);
        hit = (mask_i & mask_j) != 0 && was != 0 && now != 0 && was != now;
      }
      if (!hit) continue;
      if (i == 0) {
        flags.ego = true;
      } else {
        ++flags.others;
      }
    }
  }
  return flags;
}

double compute_reward(const RewardContext& c, const RewardParams& p) {
  double reward = 1.0 - (p.max_speed - c.ego_speed) / p.max_speed;
  if (c.collision || c.off_road) reward += p.collision;
  if (c.emergency_brake_caused || c.time_gap_violation) reward += p.near_collision;
  if (c.lane_change_initiated) reward += p.lane_change;
  return reward;
}

}  // namespace rpf::env
