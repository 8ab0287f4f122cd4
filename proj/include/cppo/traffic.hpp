#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "cppo/dynamics.hpp"
#include "cppo/rng.hpp"
#include "cppo/road_net.hpp"

namespace cppo {

struct IdmParams {
  double v0 = 9.0;         // desired speed, m/s
  double time_headway = 1.5;
  double a_max = 3.0;
  double b_comf = 3.0;
  double s0 = 2.0;         // minimum gap, m
  double delta_exp = 4.0;
};

struct TrafficConfig {
  IdmParams idm;
  double speed_init_min = 3.0;
  double speed_init_max = 7.0;
  double lookahead_m = 50.0;
  double conflict_distance_m = 3.0;   // centerlines closer than this share a conflict point
  double conflict_clearance_m = 4.0;  // stop line distance before a conflict point
  double tie_tolerance_m = 1.0;       // arc-length difference treated as a simultaneous arrival
  double spawn_first_slot_m = 8.0;    // distance of the nearest spawn slot from the junction
  double spawn_spacing_m = 8.0;
  double spawn_jitter_m = 1.0;
};

struct LeaderInfo {
  bool present = false;
  double gap = 0.0;
  double v_lead = 0.0;
};

/// Intelligent driver model, saturated to the actuator limits.
double idm_acceleration(double v, const LeaderInfo& leader, const IdmParams& params);

/// A vehicle in the world. Surrounding vehicles have `ego == false`.
struct Vehicle {
  int id = 0;
  bool ego = false;
  VehicleState state;
};

/// Junction conflict points between connector lanes entering from different lanes.
class ConflictTable {
 public:
  struct Point {
    double s_self = 0.0;   // arc length of the point along the first connector
    double s_other = 0.0;  // along the second connector
  };

  ConflictTable() = default;
  ConflictTable(const RoadNetwork& network, double conflict_distance);

  /// Conflict between connector lanes `a` and `b`, if any.
  const Point* find(int a, int b) const;
  std::size_t size() const { return count_; }

 private:
  int n_lanes_ = 0;
  std::size_t count_ = 0;
  std::vector<Point> points_;
  std::vector<char> present_;
};

/// Nearest obstacle ahead: a vehicle on the remaining path, or a virtual stopped
/// leader at a conflict point that another vehicle will reach first.
LeaderInfo find_leader(const Vehicle& self, std::span<const Vehicle> all, const RoadNetwork& network,
                       const ConflictTable& conflicts, const TrafficConfig& config);

class SpawnCapacityError : public std::runtime_error {
 public:
  SpawnCapacityError(int requested, int capacity);
  int capacity() const { return capacity_; }

 private:
  int capacity_;
};

int spawn_capacity(const RoadNetwork& network, const TrafficConfig& config, double vehicle_length);

/// Places `n_sv` IDM vehicles on approach lanes outside the lower arm in distinct
/// slots, each with a route to another arm. Ids start at 1.
std::vector<Vehicle> spawn_surrounding(Rng& rng, int n_sv, const RoadNetwork& network,
                                       const TrafficConfig& config, const DynamicsConfig& dynamics);

/// Advances every surrounding vehicle by one tick from the snapshot `world`. Vehicles
/// leaving the network are dropped. The ego (if present) is copied through unchanged.
std::vector<Vehicle> step_surrounding(std::span<const Vehicle> world, const RoadNetwork& network,
                                      const ConflictTable& conflicts, const TrafficConfig& config, double dt);

}  // namespace cppo
