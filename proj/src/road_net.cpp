#include "cppo/road_net.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cppo {

namespace {

constexpr double kPi = std::numbers::pi;

// Rotation taking the lower arm onto `zone` (quarter turns counter-clockwise).
Vec2 rotate_to(Zone zone, Vec2 p) {
  switch (zone) {
    case Zone::kLower: return p;
    case Zone::kRight: return {-p.y, p.x};
    case Zone::kUpper: return {-p.x, -p.y};
    case Zone::kLeft: return {p.y, -p.x};
  }
  return p;
}

double zone_angle(Zone zone) { return static_cast<int>(zone) * kPi / 2.0; }

}  // namespace

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

std::string_view zone_name(Zone zone) {
  switch (zone) {
    case Zone::kLower: return "lower";
    case Zone::kRight: return "right";
    case Zone::kUpper: return "upper";
    case Zone::kLeft: return "left";
  }
  return "?";
}

Zone zone_on_right_of(Zone zone) { return static_cast<Zone>((static_cast<int>(zone) + 1) % 4); }

Centerline Centerline::segment(Vec2 start, Vec2 end) {
  Centerline c;
  c.origin_ = start;
  const Vec2 delta = end - start;
  c.length_ = norm(delta);
  c.heading0_ = std::atan2(delta.y, delta.x);
  return c;
}

Centerline Centerline::arc(Vec2 start, double start_heading, double radius, double sweep) {
  Centerline c;
  const double side = sweep > 0.0 ? 1.0 : -1.0;
  const Vec2 left_normal{-std::sin(start_heading), std::cos(start_heading)};
  c.origin_ = start + (side * radius) * left_normal;
  c.heading0_ = start_heading;
  c.radius_ = radius;
  c.sweep_ = sweep;
  c.phase0_ = std::atan2(start.y - c.origin_.y, start.x - c.origin_.x);
  c.length_ = radius * std::abs(sweep);
  return c;
}

Vec2 Centerline::point_at(double s) const {
  if (!is_arc()) return origin_ + s * unit_from_heading(heading0_);
  const double side = sweep_ > 0.0 ? 1.0 : -1.0;
  const double phase = phase0_ + side * s / radius_;
  return origin_ + radius_ * Vec2{std::cos(phase), std::sin(phase)};
}

double Centerline::heading_at(double s) const {
  if (s < 0.0 || s > length_) {
    throw std::out_of_range("arc length " + std::to_string(s) + " outside [0, " +
                            std::to_string(length_) + "]");
  }
  if (!is_arc()) return heading0_;
  const double side = sweep_ > 0.0 ? 1.0 : -1.0;
  return wrap_angle(heading0_ + side * s / radius_);
}

Centerline::Projection Centerline::project(Vec2 p) const {
  Projection out;
  if (!is_arc()) {
    const Vec2 u = unit_from_heading(heading0_);
    out.s_raw = dot(p - origin_, u);
    out.s = std::clamp(out.s_raw, 0.0, length_);
    out.d = cross(u, p - origin_);
    return out;
  }
  const double side = sweep_ > 0.0 ? 1.0 : -1.0;
  const Vec2 rel = p - origin_;
  const double angle = side * wrap_angle(std::atan2(rel.y, rel.x) - phase0_);
  out.s_raw = angle * radius_;
  if (out.s_raw >= 0.0 && out.s_raw <= length_) {
    out.s = out.s_raw;
  } else {
    // Off the swept range the nearest point is one of the two ends.
    const double to_start = norm(p - point_at(0.0));
    const double to_end = norm(p - point_at(length_));
    out.s = to_start <= to_end ? 0.0 : length_;
    if (out.s == length_ && out.s_raw < 0.0) out.s_raw += 2.0 * kPi * radius_;
  }
  out.d = cross(unit_from_heading(heading_at(out.s)), p - point_at(out.s));
  return out;
}

const Lane& RoadNetwork::approach_lane(Zone zone, int index) const {
  return lane(approach_ids_.at(static_cast<std::size_t>(zone)).at(static_cast<std::size_t>(index)));
}

const Lane& RoadNetwork::exit_lane(Zone zone, int index) const {
  return lane(exit_ids_.at(static_cast<std::size_t>(zone)).at(static_cast<std::size_t>(index)));
}

const Route& RoadNetwork::route(Zone from, Zone to, int index) const {
  if (from == to || index < 0 || index >= kLanesPerCarriageway) {
    throw std::invalid_argument("no route from " + std::string(zone_name(from)) + " to " +
                                std::string(zone_name(to)) + " on lane " + std::to_string(index));
  }
  // Routes are stored per (from, to-offset, index).
  const int turn = (static_cast<int>(to) - static_cast<int>(from) + 4) % 4 - 1;
  const std::size_t slot =
      (static_cast<std::size_t>(from) * 3 + static_cast<std::size_t>(turn)) * kLanesPerCarriageway +
      static_cast<std::size_t>(index);
  return routes_.at(slot);
}

RoadNetwork::Pose RoadNetwork::pose_along(const Route& route, double progress) const {
  progress = std::clamp(progress, 0.0, route.length);
  int segment = 2;
  while (segment > 0 && progress < route.offsets[segment]) --segment;
  const Lane& l = route_lane(route, segment);
  const double s = std::min(progress - route.offsets[segment], l.centerline.length());
  return {l.centerline.point_at(s), l.centerline.heading_at(s)};
}

RoadNetwork build_intersection(const RoadConfig& config) {
  const double w = config.lane_width_m;
  const double len = config.approach_length_m;
  const double half = config.junction_half_size_m;
  if (!(w > 0.0) || !(len > 0.0) || !(half > 0.0)) {
    throw std::invalid_argument("road dimensions must be positive (lane width " + std::to_string(w) +
                                ", approach " + std::to_string(len) + ", junction half-size " +
                                std::to_string(half) + ")");
  }
  if (half <= kLanesPerCarriageway * w) {
    throw std::invalid_argument("junction half-size must exceed the carriageway width " +
                                std::to_string(kLanesPerCarriageway * w));
  }
  if (!(config.start_window_min_m >= 0.0) || config.start_window_min_m > config.start_window_max_m ||
      config.start_window_max_m >= len) {
    throw std::invalid_argument("start window must lie inside the approach road");
  }
  if (!(config.goal_distance_m > 0.0) || config.goal_distance_m > len) {
    throw std::invalid_argument("goal distance must lie on the exit road");
  }

  RoadNetwork net;
  net.config_ = config;
  net.junction_box_ = {-half, -half, half, half};

  auto add_lane = [&](LaneKind kind, Zone entry, Zone exit, int index, Centerline centerline) {
    Lane lane;
    lane.id = static_cast<int>(net.lanes_.size());
    lane.kind = kind;
    lane.entry_zone = entry;
    lane.exit_zone = exit;
    lane.index = index;
    lane.width = w;
    lane.centerline = centerline;
    net.lanes_.push_back(lane);
    return lane.id;
  };

  // Right-hand traffic. In the lower arm inbound lanes sit at x > 0 heading north,
  // outbound lanes at x < 0 heading south; the other arms are rotations of it.
  for (Zone zone : kAllZones) {
    const auto z = static_cast<std::size_t>(zone);
    for (int k = 0; k < kLanesPerCarriageway; ++k) {
      const double offset = w / 2.0 + k * w;
      net.approach_ids_[z][static_cast<std::size_t>(k)] =
          add_lane(LaneKind::kApproach, zone, zone, k,
                   Centerline::segment(rotate_to(zone, {offset, -(half + len)}), rotate_to(zone, {offset, -half})));
    }
    for (int k = 0; k < kLanesPerCarriageway; ++k) {
      const double offset = w / 2.0 + k * w;
      net.exit_ids_[z][static_cast<std::size_t>(k)] =
          add_lane(LaneKind::kExit, zone, zone, k,
                   Centerline::segment(rotate_to(zone, {-offset, -half}), rotate_to(zone, {-offset, -(half + len)})));
    }
  }

  for (Zone from : kAllZones) {
    for (int turn = 0; turn < 3; ++turn) {
      const Zone to = static_cast<Zone>((static_cast<int>(from) + turn + 1) % 4);
      for (int k = 0; k < kLanesPerCarriageway; ++k) {
        const Lane in = net.approach_lane(from, k);  // copies: add_lane may reallocate
        const Lane out = net.exit_lane(to, k);
        const Vec2 start = in.centerline.end();
        const Vec2 end = out.centerline.start();
        Centerline connector;
        if (turn == 1) {
          connector = Centerline::segment(start, end);
        } else {
          // Quarter circle tangent to both lanes: chord = radius * sqrt(2).
          const double radius = norm(end - start) / std::numbers::sqrt2;
          const double sweep = turn == 0 ? -kPi / 2.0 : kPi / 2.0;
          connector = Centerline::arc(start, zone_angle(from) + kPi / 2.0, radius, sweep);
        }
        const int conn = add_lane(LaneKind::kConnector, from, to, k, connector);

        Route route;
        route.from = from;
        route.to = to;
        route.index = k;
        route.lanes = {in.id, conn, out.id};
        route.offsets = {0.0, in.centerline.length(), in.centerline.length() + connector.length()};
        route.length = route.offsets[2] + out.centerline.length();
        net.routes_.push_back(route);
      }
    }
  }
  return net;
}

EpisodeEndpoints sample_episode_endpoints(Rng& rng, const RoadNetwork& network) {
  const RoadConfig& cfg = network.config();
  EpisodeEndpoints ep;
  const Lane& start = network.approach_lane(Zone::kLower, uniform_int(rng, 0, kLanesPerCarriageway - 1));
  const double before_junction = uniform(rng, cfg.start_window_min_m, cfg.start_window_max_m);
  ep.start_lane = start.id;
  ep.start_s = start.centerline.length() - before_junction;
  ep.start_position = start.centerline.point_at(ep.start_s);
  ep.start_heading = start.centerline.heading_at(ep.start_s);

  // Uniform over the six exit lanes outside the lower arm.
  const int pick = uniform_int(rng, 0, 3 * kLanesPerCarriageway - 1);
  ep.goal_zone = static_cast<Zone>(1 + pick / kLanesPerCarriageway);
  ep.goal_index = pick % kLanesPerCarriageway;
  const Lane& goal = network.exit_lane(ep.goal_zone, ep.goal_index);
  ep.goal_lane = goal.id;
  ep.goal_point = goal.centerline.point_at(cfg.goal_distance_m);
  return ep;
}

Centerline::Projection project_to_lane(Vec2 position, const Lane& lane) {
  return lane.centerline.project(position);
}

double lane_heading_at(const Lane& lane, double s) { return lane.centerline.heading_at(s); }

}  // namespace cppo
