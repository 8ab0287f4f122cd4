#pragma once

#include <array>
#include <string_view>

#include "cppo/road_net.hpp"

namespace cppo {

/// Discrete meta-actions available to the ego policy.
enum class Action : int {
  kLaneLeft = 0,
  kKeep = 1,
  kLaneRight = 2,
  kDecelerate = 3,
  kAccelerate = 4,
};
inline constexpr int kNumActions = 5;
std::string_view action_name(Action action);
inline bool is_lane_change(Action a) { return a == Action::kLaneLeft || a == Action::kLaneRight; }

inline constexpr double kMaxAcceleration = 8.0;   // m/s^2
inline constexpr double kMaxSteering = 0.7853981633974483;  // 45 degrees

struct DynamicsConfig {
  double delta_v = 2.0;
  double v_max = 10.0;
  double gain_speed = 2.0;    // K_v, 1/s
  double gain_heading = 2.0;  // K_psi
  double gain_lateral = 1.0;  // K_d
  double gain_offset = 2.0;   // K_y, 1/m
  double v_floor = 1.0;       // m/s
  double wheelbase_m = 2.5;
  double vehicle_length_m = 5.0;
  double vehicle_width_m = 2.0;
};

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double psi = 0.0;
  double length = 5.0;
  double width = 2.0;
  Zone from = Zone::kLower;
  Zone to = Zone::kUpper;
  int segment = 0;            // 0 approach, 1 connector, 2 exit
  int target_lane_index = 0;  // lane index within the current carriageway
  double target_speed = 0.0;
  double progress = 0.0;      // arc length along the route of the target lane

  Vec2 position() const { return {x, y}; }
};

struct ControlInput {
  double a = 0.0;
  double delta = 0.0;
};

struct SpeedLaneTargets {
  int target_lane_index = 0;
  double target_speed = 0.0;
};

const Route& route_of(const VehicleState& state, const RoadNetwork& network);
const Lane& target_lane(const VehicleState& state, const RoadNetwork& network);

SpeedLaneTargets decode_action(Action action, const VehicleState& state, const DynamicsConfig& config);

/// Longitudinal P-controller on speed and heading/offset lateral controller,
/// saturated to the actuator limits.
ControlInput low_level_control(const VehicleState& state, const RoadNetwork& network,
                               const DynamicsConfig& config);

/// Kinematic bicycle model (slip angle at the center of mass) integrated over `dt`
/// with classical RK4. Speed is floored at zero. Throws on dt <= 0.
VehicleState step_kinematics(const VehicleState& state, const ControlInput& control, double dt,
                             double wheelbase);

/// Re-projects the vehicle onto its target lane and advances the route segment
/// once the vehicle has passed the end of the current lane.
void update_route_progress(VehicleState& state, const RoadNetwork& network);

}  // namespace cppo
