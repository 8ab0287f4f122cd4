#include "cppo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cppo {

std::string_view action_name(Action action) {
  switch (action) {
    case Action::kLaneLeft: return "lane_left";
    case Action::kKeep: return "keep";
    case Action::kLaneRight: return "lane_right";
    case Action::kDecelerate: return "decelerate";
    case Action::kAccelerate: return "accelerate";
  }
  return "?";
}

const Route& route_of(const VehicleState& state, const RoadNetwork& network) {
  return network.route(state.from, state.to, state.target_lane_index);
}

const Lane& target_lane(const VehicleState& state, const RoadNetwork& network) {
  return network.route_lane(route_of(state, network), state.segment);
}

SpeedLaneTargets decode_action(Action action, const VehicleState& state, const DynamicsConfig& config) {
  SpeedLaneTargets out{state.target_lane_index, state.target_speed};
  switch (action) {
    case Action::kLaneLeft:
      if (out.target_lane_index > 0) --out.target_lane_index;
      break;
    case Action::kLaneRight:
      if (out.target_lane_index + 1 < kLanesPerCarriageway) ++out.target_lane_index;
      break;
    case Action::kDecelerate:
      out.target_speed = std::max(0.0, out.target_speed - config.delta_v);
      break;
    case Action::kAccelerate:
      out.target_speed = std::min(config.v_max, out.target_speed + config.delta_v);
      break;
    case Action::kKeep:
      break;
  }
  return out;
}

ControlInput low_level_control(const VehicleState& state, const RoadNetwork& network,
                               const DynamicsConfig& config) {
  ControlInput u;
  u.a = std::clamp(config.gain_speed * (state.target_speed - state.v), -kMaxAcceleration, kMaxAcceleration);

  const Lane& lane = target_lane(state, network);
  const auto proj = project_to_lane(state.position(), lane);
  const double heading_error = wrap_angle(lane_heading_at(lane, proj.s) - state.psi);
  const double delta = config.gain_heading * heading_error +
                       config.gain_lateral * std::atan(-config.gain_offset * proj.d / (state.v + config.v_floor));
  u.delta = std::clamp(delta, -kMaxSteering, kMaxSteering);
  return u;
}

namespace {

struct Derivative {
  double dx, dy, dpsi;
};

Derivative bicycle_rates(double v, double psi, double beta, double wheelbase) {
  return {v * std::cos(psi + beta), v * std::sin(psi + beta), 2.0 * v * std::sin(beta) / wheelbase};
}

// RK4 over an interval with constant acceleration and steering; speed stays affine in time.
void integrate(VehicleState& s, double a, double beta, double h, double wheelbase) {
  const double v0 = s.v;
  const double vm = v0 + a * h / 2.0;
  const double v1 = v0 + a * h;
  const Derivative k1 = bicycle_rates(v0, s.psi, beta, wheelbase);
  const Derivative k2 = bicycle_rates(vm, s.psi + h / 2.0 * k1.dpsi, beta, wheelbase);
  const Derivative k3 = bicycle_rates(vm, s.psi + h / 2.0 * k2.dpsi, beta, wheelbase);
  const Derivative k4 = bicycle_rates(v1, s.psi + h * k3.dpsi, beta, wheelbase);
  s.x += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  s.y += h / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
  s.psi += h / 6.0 * (k1.dpsi + 2.0 * k2.dpsi + 2.0 * k3.dpsi + k4.dpsi);
  s.v = v1;
}

}  // namespace

VehicleState step_kinematics(const VehicleState& state, const ControlInput& control, double dt, double wheelbase) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  VehicleState next = state;
  const double beta = std::atan(0.5 * std::tan(control.delta));
  const double a = control.a;
  if (next.v + a * dt >= 0.0) {
    integrate(next, a, beta, dt, wheelbase);
  } else {
    // Braking to a stop inside the step: integrate up to the stop, then hold.
    const double t_stop = a < 0.0 ? next.v / -a : 0.0;
    if (t_stop > 0.0) integrate(next, a, beta, t_stop, wheelbase);
    next.v = 0.0;
  }
  next.v = std::max(0.0, next.v);
  next.psi = wrap_angle(next.psi);
  return next;
}

void update_route_progress(VehicleState& state, const RoadNetwork& network) {
  const Route& route = route_of(state, network);
  auto proj = project_to_lane(state.position(), network.route_lane(route, state.segment));
  while (state.segment < 2 && proj.s_raw >= network.route_lane(route, state.segment).centerline.length()) {
    ++state.segment;
    proj = project_to_lane(state.position(), network.route_lane(route, state.segment));
  }
  state.progress = route.offsets[state.segment] + proj.s_raw;
}

}  // namespace cppo
