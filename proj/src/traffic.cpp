#include "cppo/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cppo {

double idm_acceleration(double v, const LeaderInfo& leader, const IdmParams& p) {
  double a = p.a_max * (1.0 - std::pow(v / p.v0, p.delta_exp));
  if (leader.present) {
    if (leader.gap <= 0.0) return -kMaxAcceleration;
    const double dv = v - leader.v_lead;
    const double desired = p.s0 + std::max(0.0, v * p.time_headway + v * dv / (2.0 * std::sqrt(p.a_max * p.b_comf)));
    const double ratio = desired / leader.gap;
    a -= p.a_max * ratio * ratio;
  }
  return std::clamp(a, -kMaxAcceleration, kMaxAcceleration);
}

ConflictTable::ConflictTable(const RoadNetwork& network, double conflict_distance)
    : n_lanes_(static_cast<int>(network.lanes().size())),
      points_(static_cast<std::size_t>(n_lanes_ * n_lanes_)),
      present_(static_cast<std::size_t>(n_lanes_ * n_lanes_), 0) {
  std::vector<const Lane*> connectors;
  for (const Lane& lane : network.lanes()) {
    if (lane.kind == LaneKind::kConnector) connectors.push_back(&lane);
  }
  constexpr double kStep = 0.25;
  auto samples = [&](const Centerline& c) {
    std::vector<Vec2> pts;
    const int n = static_cast<int>(std::ceil(c.length() / kStep));
    for (int i = 0; i <= n; ++i) pts.push_back(c.point_at(c.length() * i / n));
    return pts;
  };

  for (std::size_t i = 0; i < connectors.size(); ++i) {
    const Lane& a = *connectors[i];
    const auto pa = samples(a.centerline);
    for (std::size_t j = i + 1; j < connectors.size(); ++j) {
      const Lane& b = *connectors[j];
      // Connectors fed by the same approach lane diverge; car following covers them.
      if (a.entry_zone == b.entry_zone && a.index == b.index) continue;
      const auto pb = samples(b.centerline);
      double best = std::numeric_limits<double>::infinity();
      std::size_t bi = 0, bj = 0;
      for (std::size_t u = 0; u < pa.size(); ++u) {
        for (std::size_t v = 0; v < pb.size(); ++v) {
          const double dist = norm(pa[u] - pb[v]);
          if (dist < best) {
            best = dist;
            bi = u;
            bj = v;
          }
        }
      }
      if (best > conflict_distance) continue;
      double sa = a.centerline.length() * static_cast<double>(bi) / static_cast<double>(pa.size() - 1);
      double sb = b.centerline.length() * static_cast<double>(bj) / static_cast<double>(pb.size() - 1);
      for (int it = 0; it < 100; ++it) {
        sa = a.centerline.project(b.centerline.point_at(sb)).s;
        sb = b.centerline.project(a.centerline.point_at(sa)).s;
      }
      const auto ab = static_cast<std::size_t>(a.id * n_lanes_ + b.id);
      const auto ba = static_cast<std::size_t>(b.id * n_lanes_ + a.id);
      points_[ab] = {sa, sb};
      points_[ba] = {sb, sa};
      present_[ab] = present_[ba] = 1;
      count_ += 2;
    }
  }
}

const ConflictTable::Point* ConflictTable::find(int a, int b) const {
  if (a < 0 || b < 0 || a >= n_lanes_ || b >= n_lanes_) return nullptr;
  const auto k = static_cast<std::size_t>(a * n_lanes_ + b);
  return present_[k] ? &points_[k] : nullptr;
}

namespace {

// True if `other` has right of way over `self` at a shared conflict point.
bool other_goes_first(const Vehicle& self, double d_self, const Vehicle& other, double d_other, double tie) {
  if (d_other < d_self - tie) return true;
  if (d_self < d_other - tie) return false;
  if (other.state.from == zone_on_right_of(self.state.from)) return true;
  if (self.state.from == zone_on_right_of(other.state.from)) return false;
  if (d_other != d_self) return d_other < d_self;
  return other.id < self.id;
}

}  // namespace

LeaderInfo find_leader(const Vehicle& self, std::span<const Vehicle> all, const RoadNetwork& network,
                       const ConflictTable& conflicts, const TrafficConfig& config) {
  LeaderInfo best;
  best.gap = std::numeric_limits<double>::infinity();
  auto consider = [&](double gap, double v_lead) {
    if (gap < best.gap) {
      best.present = true;
      best.gap = std::max(0.0, gap);
      best.v_lead = v_lead;
    }
  };

  const VehicleState& me = self.state;
  const Route& mine = route_of(me, network);
  for (const Vehicle& other : all) {
    if (other.id == self.id) continue;
    const VehicleState& o = other.state;
    const Route& theirs = route_of(o, network);
    const int their_lane = theirs.lanes[o.segment];
    const double their_s = o.progress - theirs.offsets[o.segment];

    for (int seg = me.segment; seg < 3; ++seg) {
      if (mine.lanes[seg] != their_lane) continue;
      const double dist = mine.offsets[seg] + their_s - me.progress;
      if (dist > 0.0 && dist < config.lookahead_m) consider(dist - 0.5 * (me.length + o.length), o.v);
    }

    const ConflictTable::Point* point = conflicts.find(mine.lanes[1], theirs.lanes[1]);
    if (point == nullptr) continue;
    const double d_self = mine.offsets[1] + point->s_self - me.progress;
    const double d_other = theirs.offsets[1] + point->s_other - o.progress;
    if (d_self > config.lookahead_m || d_other > config.lookahead_m) continue;
    if (d_other < -(config.conflict_clearance_m + 0.5 * o.length)) continue;  // already cleared
    const double stop_gap = d_self - config.conflict_clearance_m - 0.5 * me.length;
    if (stop_gap < 0.0) continue;  // past the stop line: committed
    if (other_goes_first(self, d_self, other, d_other, config.tie_tolerance_m)) consider(stop_gap, 0.0);
  }
  if (!best.present) best.gap = 0.0;
  return best;
}

SpawnCapacityError::SpawnCapacityError(int requested, int capacity)
    : std::runtime_error("cannot place " + std::to_string(requested) + " surrounding vehicles: capacity is " +
                         std::to_string(capacity)),
      capacity_(capacity) {}

namespace {

struct Slot {
  Zone zone;
  int index;
  double distance;  // from the junction entry
};

std::vector<Slot> spawn_slots(const RoadNetwork& network, const TrafficConfig& config, double vehicle_length) {
  std::vector<Slot> slots;
  const double limit = network.config().approach_length_m - config.spawn_jitter_m - 0.5 * vehicle_length;
  for (Zone zone : {Zone::kRight, Zone::kUpper, Zone::kLeft}) {
    for (int k = 0; k < kLanesPerCarriageway; ++k) {
      for (double d = config.spawn_first_slot_m; d <= limit; d += config.spawn_spacing_m) {
        slots.push_back({zone, k, d});
      }
    }
  }
  return slots;
}

}  // namespace

int spawn_capacity(const RoadNetwork& network, const TrafficConfig& config, double vehicle_length) {
  return static_cast<int>(spawn_slots(network, config, vehicle_length).size());
}

std::vector<Vehicle> spawn_surrounding(Rng& rng, int n_sv, const RoadNetwork& network, const TrafficConfig& config,
                                       const DynamicsConfig& dynamics) {
  if (n_sv < 0) throw std::invalid_argument("surrounding vehicle count must be non-negative");
  std::vector<Slot> slots = spawn_slots(network, config, dynamics.vehicle_length_m);
  const int capacity = static_cast<int>(slots.size());
  if (n_sv > capacity) throw SpawnCapacityError(n_sv, capacity);

  // Partial Fisher-Yates: the first n_sv slots are a uniform sample without replacement.
  for (int i = 0; i < n_sv; ++i) std::swap(slots[static_cast<std::size_t>(i)],
                                           slots[static_cast<std::size_t>(uniform_int(rng, i, capacity - 1))]);

  std::vector<Vehicle> out;
  out.reserve(static_cast<std::size_t>(n_sv));
  for (int i = 0; i < n_sv; ++i) {
    const Slot& slot = slots[static_cast<std::size_t>(i)];
    Vehicle veh;
    veh.id = i + 1;
    VehicleState& s = veh.state;
    s.length = dynamics.vehicle_length_m;
    s.width = dynamics.vehicle_width_m;
    s.from = slot.zone;
    s.to = static_cast<Zone>((static_cast<int>(slot.zone) + uniform_int(rng, 1, 3)) % 4);
    s.target_lane_index = slot.index;
    s.segment = 0;
    const double distance = slot.distance + uniform(rng, -config.spawn_jitter_m, config.spawn_jitter_m);
    s.progress = network.config().approach_length_m - distance;
    s.v = uniform(rng, config.speed_init_min, config.speed_init_max);
    s.target_speed = config.idm.v0;
    const auto pose = network.pose_along(route_of(s, network), s.progress);
    s.x = pose.position.x;
    s.y = pose.position.y;
    s.psi = pose.heading;
    out.push_back(veh);
  }
  return out;
}

std::vector<Vehicle> step_surrounding(std::span<const Vehicle> world, const RoadNetwork& network,
                                      const ConflictTable& conflicts, const TrafficConfig& config, double dt) {
  std::vector<Vehicle> next;
  next.reserve(world.size());
  for (const Vehicle& veh : world) {
    if (veh.ego) {
      next.push_back(veh);
      continue;
    }
    const LeaderInfo leader = find_leader(veh, world, network, conflicts, config);
    const double a = idm_acceleration(veh.state.v, leader, config.idm);
    Vehicle moved = veh;
    VehicleState& s = moved.state;
    double travelled;
    if (s.v + a * dt >= 0.0) {
      travelled = s.v * dt + 0.5 * a * dt * dt;
      s.v += a * dt;
    } else {
      travelled = a < 0.0 ? s.v * s.v / (-2.0 * a) : 0.0;
      s.v = 0.0;
    }
    s.progress += travelled;
    const Route& route = route_of(s, network);
    if (s.progress >= route.length) continue;
    while (s.segment < 2 && s.progress >= route.offsets[s.segment + 1]) ++s.segment;
    const auto pose = network.pose_along(route, s.progress);
    s.x = pose.position.x;
    s.y = pose.position.y;
    s.psi = pose.heading;
    next.push_back(moved);
  }
  return next;
}

}  // namespace cppo
