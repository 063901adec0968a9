#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "rpf/types.hpp"

namespace rpf::env {

enum class Lateral { kStay, kLeft, kRight };

/// Longitudinal acceleration command (m/s^2) plus lateral command.
struct EgoAction {
  double acceleration = 0.0;
  Lateral lateral = Lateral::kStay;

  friend bool operator==(const EgoAction&, const EgoAction&) = default;
};

/// Action table. Indices are stable: network outputs, replay memory and
/// traces all refer to these positions.
inline constexpr std::array<EgoAction, kNumActions> kActions{{
    {0.0, Lateral::kStay},
    {1.0, Lateral::kStay},
    {-1.0, Lateral::kStay},
    {0.0, Lateral::kLeft},
    {1.0, Lateral::kLeft},
    {-1.0, Lateral::kLeft},
    {0.0, Lateral::kRight},
    {1.0, Lateral::kRight},
    {-1.0, Lateral::kRight},
    {-4.0, Lateral::kStay},
}};

inline constexpr std::size_t kMaintainAction = 0;
inline constexpr std::size_t kAccelerateAction = 1;
inline constexpr std::size_t kDecelerateAction = 2;
/// Stay in lane and brake at -4 m/s^2; also the safety fallback.
inline constexpr std::size_t kHardBrakeAction = 9;

/// Index of (acceleration, lateral) in kActions; hard braking only exists
/// with Lateral::kStay.
std::size_t action_index(double acceleration, Lateral lateral);
std::string_view action_name(std::size_t index);

enum class Driver {
  kEgo,
  kIdm,            // IDM longitudinal + overtaking lane changes
  kIdmKeepLane,    // IDM longitudinal only
  kConstantSpeed,  // scripted; holds its speed, may be stopped or oncoming
};

struct Vehicle {
  int id = 0;
  double x = 0.0;   // front bumper position along the road, m
  double y = 0.0;   // lateral position, m; 0 is the rightmost lane center
  double vx = 0.0;  // m/s; negative only for oncoming scripted vehicles
  double vy = 0.0;  // m/s; positive towards the left
  int lane = 0;         // lane the vehicle is in (source lane while changing)
  int target_lane = 0;  // equals lane unless a lane change is in progress
  double length = 5.0;
  double desired_speed = 25.0;
  double lane_change_progress = 0.0;  // s since the change started; 0 when not changing
  Driver driver = Driver::kIdm;

  bool is_ego() const { return driver == Driver::kEgo; }
  bool changing_lanes() const { return lane != target_lane; }
  double rear() const { return x - length; }
  /// Bit set of lanes the vehicle occupies (both lanes during a change).
  unsigned lane_mask() const { return (1u << lane) | (1u << target_lane); }

  friend bool operator==(const Vehicle&, const Vehicle&) = default;
};

/// Kinematic state of the scene. The ego is always vehicles[0].
struct TrafficState {
  std::vector<Vehicle> vehicles;
  int elapsed_steps = 0;
  bool terminated = false;

  const Vehicle& ego() const { return vehicles.front(); }
  Vehicle& ego() { return vehicles.front(); }

  friend bool operator==(const TrafficState&, const TrafficState&) = default;
};

struct EventFlags {
  bool collision = false;  // ego involved
  bool off_road = false;
  bool emergency_brake_caused = false;
  bool time_gap_violation = false;
  bool lane_change_initiated = false;
  int other_collisions = 0;  // collisions between surrounding vehicles

  bool crashed() const { return collision || off_road; }
  friend bool operator==(const EventFlags&, const EventFlags&) = default;
};

struct StepOutcome {
  TrafficState next;
  double reward = 0.0;
  bool terminated = false;
  EventFlags events;
};

struct RoadParams {
  int lanes = 3;
  double lane_width = 3.2;
  double length = 5000.0;
  double time_step = 1.0;
  double lane_change_duration = 4.0;
  double sensor_range = 200.0;
  int max_steps = 100;

  double lane_center(int lane) const { return lane * lane_width; }
  double y_max() const { return lanes * lane_width; }
  double lateral_speed() const { return lane_width / lane_change_duration; }
};

struct IdmParams {
  double max_accel = 2.6;
  double comfort_decel = 4.5;
  double min_gap = 2.0;
  double time_headway = 1.0;
  double exponent = 4.0;
  double max_decel = 9.0;
};

struct LaneChangeParams {
  double speed_deficit = 1.0;     // leader must hold the vehicle this far below its desired speed
  double speed_gain = 1.0;        // required anticipated-speed advantage of the target lane
  double lookahead = 100.0;       // leaders further away do not constrain anticipated speed
  double safe_decel = 4.5;        // nobody may need to brake harder than this after the change
  double min_time_gap = 2.5;      // accepted gaps must also exceed this many seconds at the rear vehicle's speed
};

struct RewardParams {
  double max_speed = 25.0;  // speed normalizer of the efficiency term
  double collision = -10.0;
  double near_collision = -10.0;
  double lane_change = -1.0;
  double emergency_decel = 4.5;
  double time_gap = 2.5;
  bool penalize_follower_gap = false;  // also flag a follower closer than time_gap behind the ego
};

struct EgoParams {
  double length = 16.0;
  double max_speed = 25.0;
  double min_speed = 0.0;
};

/// Static parameters of the simulator.
struct EnvParams {
  RoadParams road;
  IdmParams idm;
  LaneChangeParams lane_change;
  RewardParams reward;
  EgoParams ego;
  double car_length = 5.0;
  double speed_min = 15.0;  // normalizer range of surrounding speeds
  double speed_max = 35.0;
};

enum class ScenarioKind { kNominal, kStoppedVehicle, kSpeedingVehicle, kOncoming };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view name);

/// Episode generator settings. Overrides only apply to their own kind.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kNominal;
  std::uint64_t seed = 0;
  int vehicle_count = 25;
  double speed_min = 15.0;
  double speed_max = 35.0;

  // nominal placement
  double ego_start = 1000.0;
  double ego_speed_min = 15.0;
  double ego_speed_max = 25.0;
  double spawn_span = 400.0;        // cars are placed within this distance of the ego
  double spawn_clearance = 10.0;    // minimum longitudinal offset from the ego front

  // stopped vehicle
  double stopped_distance = 300.0;
  int slow_center_vehicles = 3;
  double slow_speed_min = 15.0;
  double slow_speed_max = 18.0;

  // speeding vehicle
  double speeder_speed = 55.0;
  double speeder_offset = -150.0;
  double slow_leader_distance = 60.0;
  double slow_leader_speed = 15.0;

  // oncoming vehicle
  double oncoming_speed = -25.0;
  double oncoming_distance = 400.0;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws ConfigError when the settings are inconsistent.
void validate(const ScenarioConfig& config);

}  // namespace rpf::env
