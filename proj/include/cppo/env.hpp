#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "cppo/collision.hpp"
#include "cppo/dynamics.hpp"
#include "cppo/road_net.hpp"
#include "cppo/traffic.hpp"

namespace cppo {

enum class Outcome : int { kRunning = 0, kSuccess, kCollision, kOffRoad, kTimeout };
std::string_view outcome_name(Outcome outcome);
Outcome parse_outcome(std::string_view name);

struct RewardConfig {
  double w_success = 10.0;
  double alpha_n = 0.2;   // success bonus per vehicle in the junction
  double alpha_t = 0.5;   // success bonus for finishing early
  double w_collision = 10.0;
  double beta_n = 0.25;   // collision penalty per vehicle in the junction
  double beta_v = 1.0;    // collision penalty growth with ego speed
  double w_timeout = 5.0;
  double w_offroad = 5.0;
  double w_lane_change = 0.1;
  double w_live = 0.05;
  double w_accel = 0.05;
  int n_sparse = 2;
  bool accel_term = true;
};

struct EnvConfig {
  DynamicsConfig dynamics;
  TrafficConfig traffic;
  RewardConfig reward;
  double sim_hz = 15.0;
  double t_max_s = 24.0;
  double goal_radius_m = 4.0;
  int max_vehicles = 8;
  double position_scale_m = 100.0;
  double velocity_scale_mps = 10.0;
  double offroad_margin_m = 0.5;
  double ego_initial_speed = 5.0;

  double dt() const { return 1.0 / sim_hz; }
  int max_steps() const;
  int observation_size() const { return (max_vehicles + 1) * 6; }
};

/// (max_vehicles + 1) x 6 observation; row 0 is the ego, rows 1.. the nearest
/// surrounding vehicles by distance, zero rows for absent vehicles.
class StateMatrix {
 public:
  static constexpr int kFeatures = 6;

  StateMatrix() = default;
  explicit StateMatrix(int max_vehicles)
      : rows_(max_vehicles + 1), data_(static_cast<std::size_t>((max_vehicles + 1) * kFeatures), 0.0) {}

  int rows() const { return rows_; }
  double& at(int row, int col) { return data_[static_cast<std::size_t>(row * kFeatures + col)]; }
  double at(int row, int col) const { return data_[static_cast<std::size_t>(row * kFeatures + col)]; }
  std::span<const double> flat() const { return data_; }
  bool row_is_padding(int row) const;
  int occupied_rows() const;

  friend bool operator==(const StateMatrix&, const StateMatrix&) = default;

 private:
  int rows_ = 0;
  std::vector<double> data_;
};

struct EpisodeContext {
  int t = 0;
  double elapsed_s = 0.0;
  int n_car = 0;
  int lane_change_count = 0;
  Outcome outcome = Outcome::kRunning;
};

struct RewardBreakdown {
  double r_succ = 0.0;
  double r_colli = 0.0;
  double r_to = 0.0;
  double r_ofr = 0.0;
  double r_lc = 0.0;
  double r_l = 0.0;
  double r_acc = 0.0;
  double total = 0.0;
};

/// What the reward needs to know about one tick.
struct Transition {
  Action action = Action::kKeep;
  Outcome outcome = Outcome::kRunning;
  double ego_speed = 0.0;
  int occupancy = 0;  // surrounding vehicles currently inside the junction box
};

RewardBreakdown compute_reward(const Transition& transition, const EpisodeContext& ctx, const RewardConfig& weights,
                               double t_max_s, double v_max);

StateMatrix observe(const Vehicle& ego, std::span<const Vehicle> others, const EnvConfig& config);

OrientedRect footprint(const VehicleState& state);
bool detect_collision(const VehicleState& ego, std::span<const Vehicle> others);
bool check_off_road(const VehicleState& ego, const RoadNetwork& network, double margin);

struct NsvRange {
  int lo = 0;
  int hi = 0;
};

struct StepResult {
  StateMatrix observation;
  RewardBreakdown reward;
  Outcome outcome = Outcome::kRunning;
  int occupancy = 0;
};

/// One ego vehicle crossing the junction among IDM traffic, ticking at `sim_hz`.
class IntersectionEnv {
 public:
  /// `network` and `conflicts` must outlive the environment.
  IntersectionEnv(const RoadNetwork& network, const ConflictTable& conflicts, EnvConfig config);

  StateMatrix reset(NsvRange range, Rng& rng);
  /// Throws std::logic_error once the episode has terminated.
  StepResult step(Action action);

  const EnvConfig& config() const { return config_; }
  const RoadNetwork& network() const { return *network_; }
  const EpisodeContext& context() const { return ctx_; }
  const EpisodeEndpoints& endpoints() const { return endpoints_; }
  const Vehicle& ego() const { return ego_; }
  const std::vector<Vehicle>& surrounding() const { return others_; }
  int spawned_count() const { return spawned_; }
  StateMatrix observe() const;

  /// Places the world directly; used by tests and replays.
  void set_world(const Vehicle& ego, std::vector<Vehicle> others, const EpisodeEndpoints& endpoints);

 private:
  int junction_occupancy() const;

  const RoadNetwork* network_;
  const ConflictTable* conflicts_;
  EnvConfig config_;
  Vehicle ego_;
  std::vector<Vehicle> others_;
  EpisodeEndpoints endpoints_;
  EpisodeContext ctx_;
  int spawned_ = 0;
};

}  // namespace cppo
