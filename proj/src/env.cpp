#include "cppo/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cppo {

std::string_view outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::kRunning: return "running";
    case Outcome::kSuccess: return "success";
    case Outcome::kCollision: return "collision";
    case Outcome::kOffRoad: return "off_road";
    case Outcome::kTimeout: return "timeout";
  }
  return "?";
}

Outcome parse_outcome(std::string_view name) {
  for (Outcome o : {Outcome::kRunning, Outcome::kSuccess, Outcome::kCollision, Outcome::kOffRoad, Outcome::kTimeout}) {
    if (outcome_name(o) == name) return o;
  }
  throw std::invalid_argument("unknown outcome '" + std::string(name) + "'");
}

int EnvConfig::max_steps() const { return static_cast<int>(std::lround(t_max_s * sim_hz)); }

bool StateMatrix::row_is_padding(int row) const {
  for (int c = 0; c < kFeatures; ++c) {
    if (at(row, c) != 0.0) return false;
  }
  return true;
}

int StateMatrix::occupied_rows() const {
  int n = 0;
  for (int r = 0; r < rows_; ++r) n += row_is_padding(r) ? 0 : 1;
  return n;
}

RewardBreakdown compute_reward(const Transition& tr, const EpisodeContext& ctx, const RewardConfig& w, double t_max_s,
                               double v_max) {
  RewardBreakdown r;
  const double n_car = ctx.n_car;
  switch (tr.outcome) {
    case Outcome::kSuccess:
      r.r_succ = w.w_success * (1.0 + w.alpha_n * n_car) *
                 (1.0 + w.alpha_t * std::max(0.0, (t_max_s - ctx.elapsed_s) / t_max_s));
      break;
    case Outcome::kCollision:
      r.r_colli = -w.w_collision * (1.0 + w.beta_n * n_car) * (1.0 + w.beta_v * tr.ego_speed / v_max);
      break;
    case Outcome::kTimeout: r.r_to = -w.w_timeout; break;
    case Outcome::kOffRoad: r.r_ofr = -w.w_offroad; break;
    case Outcome::kRunning: r.r_l = w.w_live; break;
  }
  if (is_lane_change(tr.action)) r.r_lc = -w.w_lane_change;
  if (w.accel_term && tr.action == Action::kAccelerate) {
    r.r_acc = tr.occupancy <= w.n_sparse ? w.w_accel : -w.w_accel;
  }
  r.total = r.r_succ + r.r_colli + r.r_to + r.r_ofr + r.r_lc + r.r_l + r.r_acc;
  return r;
}

namespace {

void fill_row(StateMatrix& m, int row, const VehicleState& s, const EnvConfig& cfg) {
  const double features[StateMatrix::kFeatures] = {
      s.x / cfg.position_scale_m,
      s.y / cfg.position_scale_m,
      s.v * std::cos(s.psi) / cfg.velocity_scale_mps,
      s.v * std::sin(s.psi) / cfg.velocity_scale_mps,
      std::sin(s.psi),
      std::cos(s.psi),
  };
  for (int c = 0; c < StateMatrix::kFeatures; ++c) m.at(row, c) = std::clamp(features[c], -1.0, 1.0);
}

}  // namespace

StateMatrix observe(const Vehicle& ego, std::span<const Vehicle> others, const EnvConfig& config) {
  StateMatrix m(config.max_vehicles);
  fill_row(m, 0, ego.state, config);

  struct Ranked {
    double distance;
    int id;
    const VehicleState* state;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(others.size());
  for (const Vehicle& v : others) {
    if (v.ego) continue;
    ranked.push_back({norm(v.state.position() - ego.state.position()), v.id, &v.state});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  const int n = std::min<int>(config.max_vehicles, static_cast<int>(ranked.size()));
  for (int i = 0; i < n; ++i) fill_row(m, i + 1, *ranked[static_cast<std::size_t>(i)].state, config);
  return m;
}

OrientedRect footprint(const VehicleState& s) { return {s.position(), s.psi, s.length, s.width}; }

bool detect_collision(const VehicleState& ego, std::span<const Vehicle> others) {
  const OrientedRect mine = footprint(ego);
  for (const Vehicle& v : others) {
    if (v.ego) continue;
    if (rects_intersect(mine, footprint(v.state))) return true;
  }
  return false;
}

bool check_off_road(const VehicleState& ego, const RoadNetwork& network, double margin) {
  const Vec2 p = ego.position();
  if (network.junction_box().contains(p)) return false;
  for (const Lane& lane : network.lanes()) {
    const auto proj = project_to_lane(p, lane);
    const double dist = norm(p - lane.centerline.point_at(proj.s));
    if (dist <= 0.5 * lane.width + margin) return false;
  }
  return true;
}

IntersectionEnv::IntersectionEnv(const RoadNetwork& network, const ConflictTable& conflicts, EnvConfig config)
    : network_(&network), conflicts_(&conflicts), config_(std::move(config)) {
  if (config_.max_vehicles < 0) throw std::invalid_argument("max_vehicles must be non-negative");
  if (!(config_.sim_hz > 0.0) || !(config_.t_max_s > 0.0)) {
    throw std::invalid_argument("simulation frequency and horizon must be positive");
  }
  ctx_.outcome = Outcome::kTimeout;  // no episode yet
}

StateMatrix IntersectionEnv::reset(NsvRange range, Rng& rng) {
  if (range.lo < 0 || range.hi < range.lo) {
    throw std::invalid_argument("invalid surrounding-vehicle range [" + std::to_string(range.lo) + ", " +
                                std::to_string(range.hi) + "]");
  }
  endpoints_ = sample_episode_endpoints(rng, *network_);
  const int n_sv = uniform_int(rng, range.lo, range.hi);
  others_ = spawn_surrounding(rng, n_sv, *network_, config_.traffic, config_.dynamics);
  spawned_ = n_sv;

  ego_ = Vehicle{};
  ego_.id = 0;
  ego_.ego = true;
  VehicleState& s = ego_.state;
  s.x = endpoints_.start_position.x;
  s.y = endpoints_.start_position.y;
  s.psi = endpoints_.start_heading;
  s.v = config_.ego_initial_speed;
  s.target_speed = s.v;
  s.length = config_.dynamics.vehicle_length_m;
  s.width = config_.dynamics.vehicle_width_m;
  s.from = Zone::kLower;
  s.to = endpoints_.goal_zone;
  s.target_lane_index = endpoints_.goal_index;
  s.segment = 0;
  update_route_progress(s, *network_);

  ctx_ = EpisodeContext{};
  return observe();
}

void IntersectionEnv::set_world(const Vehicle& ego, std::vector<Vehicle> others, const EpisodeEndpoints& endpoints) {
  ego_ = ego;
  ego_.ego = true;
  others_ = std::move(others);
  spawned_ = static_cast<int>(others_.size());
  endpoints_ = endpoints;
  ctx_ = EpisodeContext{};
}

StateMatrix IntersectionEnv::observe() const { return cppo::observe(ego_, others_, config_); }

int IntersectionEnv::junction_occupancy() const {
  const Box& box = network_->junction_box();
  return static_cast<int>(
      std::count_if(others_.begin(), others_.end(), [&](const Vehicle& v) { return box.contains(v.state.position()); }));
}

StepResult IntersectionEnv::step(Action action) {
  if (ctx_.outcome != Outcome::kRunning) throw std::logic_error("step called on a terminated episode");

  VehicleState& s = ego_.state;
  const SpeedLaneTargets targets = decode_action(action, s, config_.dynamics);
  s.target_speed = targets.target_speed;
  if (targets.target_lane_index != s.target_lane_index) {
    s.target_lane_index = targets.target_lane_index;
    update_route_progress(s, *network_);
  }
  if (is_lane_change(action)) ++ctx_.lane_change_count;

  const ControlInput u = low_level_control(s, *network_, config_.dynamics);

  // Surrounding vehicles react to the pre-tick snapshot, ego included.
  std::vector<Vehicle> world;
  world.reserve(others_.size() + 1);
  world.push_back(ego_);
  world.insert(world.end(), others_.begin(), others_.end());
  std::vector<Vehicle> next = step_surrounding(world, *network_, *conflicts_, config_.traffic, config_.dt());
  others_.assign(next.begin() + 1, next.end());

  s = step_kinematics(s, u, config_.dt(), config_.dynamics.wheelbase_m);
  update_route_progress(s, *network_);

  ++ctx_.t;
  ctx_.elapsed_s = ctx_.t * config_.dt();
  const int occupancy = junction_occupancy();
  if (network_->junction_box().contains(s.position())) ctx_.n_car = std::max(ctx_.n_car, occupancy);

  Outcome outcome = Outcome::kRunning;
  if (detect_collision(s, others_)) {
    outcome = Outcome::kCollision;
  } else if (check_off_road(s, *network_, config_.offroad_margin_m)) {
    outcome = Outcome::kOffRoad;
  } else if (norm(s.position() - endpoints_.goal_point) <= config_.goal_radius_m) {
    outcome = Outcome::kSuccess;
  } else if (ctx_.t >= config_.max_steps()) {
    outcome = Outcome::kTimeout;
  }
  ctx_.outcome = outcome;

  StepResult out;
  out.outcome = outcome;
  out.occupancy = occupancy;
  out.reward = compute_reward({action, outcome, s.v, occupancy}, ctx_, config_.reward, config_.t_max_s,
                              config_.dynamics.v_max);
  out.observation = observe();
  return out;
}

}  // namespace cppo
