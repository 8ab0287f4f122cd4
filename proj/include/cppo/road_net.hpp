#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "cppo/rng.hpp"

namespace cppo {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);
Vec2 unit_from_heading(double heading);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// The four arms, counter-clockwise starting from the ego's arm.
enum class Zone : int { kLower = 0, kRight = 1, kUpper = 2, kLeft = 3 };
inline constexpr std::array<Zone, 4> kAllZones{Zone::kLower, Zone::kRight, Zone::kUpper, Zone::kLeft};
std::string_view zone_name(Zone zone);
/// The arm on the right-hand side of a vehicle arriving from `zone`.
Zone zone_on_right_of(Zone zone);

enum class LaneKind { kApproach, kConnector, kExit };

/// Straight segment or circular arc, parameterized by arc length.
class Centerline {
 public:
  static Centerline segment(Vec2 start, Vec2 end);
  /// Arc starting at `start` with tangent `start_heading`, turning left
  /// (sweep > 0) or right (sweep < 0) by |sweep| radians on radius `radius`.
  static Centerline arc(Vec2 start, double start_heading, double radius, double sweep);

  struct Projection {
    double s = 0.0;      // clamped to [0, length]
    double d = 0.0;      // lateral offset, positive to the left of travel
    double s_raw = 0.0;  // unclamped along-track coordinate
  };

  double length() const { return length_; }
  bool is_arc() const { return radius_ > 0.0; }
  double radius() const { return radius_; }
  double sweep() const { return sweep_; }
  Vec2 start() const { return point_at(0.0); }
  Vec2 end() const { return point_at(length_); }

  Vec2 point_at(double s) const;
  /// Tangent direction at `s`; throws std::out_of_range outside [0, length].
  double heading_at(double s) const;
  Projection project(Vec2 p) const;

 private:
  Vec2 origin_;            // segment start, or arc center
  double heading0_ = 0.0;  // segment heading, or start heading of the arc
  double radius_ = 0.0;
  double sweep_ = 0.0;
  double phase0_ = 0.0;    // polar angle of the arc start about the center
  double length_ = 0.0;
};

struct Lane {
  int id = 0;
  LaneKind kind = LaneKind::kApproach;
  Zone entry_zone = Zone::kLower;
  Zone exit_zone = Zone::kLower;
  int index = 0;  // 0 = lane next to the road centerline (left lane), 1 = outer (right) lane
  double width = 0.0;
  Centerline centerline;
};

/// approach lane -> junction connector -> exit lane, all with the same lane index.
struct Route {
  Zone from = Zone::kLower;
  Zone to = Zone::kUpper;
  int index = 0;
  std::array<int, 3> lanes{};
  std::array<double, 3> offsets{};  // route arc length at the start of each lane
  double length = 0.0;
};

struct Box {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  bool contains(Vec2 p) const { return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y; }
};

struct RoadConfig {
  double lane_width_m = 4.0;
  double approach_length_m = 60.0;
  double junction_half_size_m = 12.0;
  double start_window_min_m = 20.0;  // distance before the junction
  double start_window_max_m = 50.0;
  double goal_distance_m = 20.0;     // goal point distance along the exit lane
};

inline constexpr int kLanesPerCarriageway = 2;

class RoadNetwork {
 public:
  const RoadConfig& config() const { return config_; }
  const std::vector<Lane>& lanes() const { return lanes_; }
  const std::vector<Route>& routes() const { return routes_; }
  const Lane& lane(int id) const { return lanes_.at(static_cast<std::size_t>(id)); }
  const Box& junction_box() const { return junction_box_; }

  const Lane& approach_lane(Zone zone, int index) const;
  const Lane& exit_lane(Zone zone, int index) const;
  /// Throws std::invalid_argument for U-turns or bad indices.
  const Route& route(Zone from, Zone to, int index) const;

  /// Lane of `route` at position `segment` (0 approach, 1 connector, 2 exit).
  const Lane& route_lane(const Route& route, int segment) const { return lane(route.lanes[segment]); }

  struct Pose {
    Vec2 position;
    double heading = 0.0;
  };
  /// Pose at route arc length `progress`, clamped to the route.
  Pose pose_along(const Route& route, double progress) const;

 private:
  friend RoadNetwork build_intersection(const RoadConfig& config);

  RoadConfig config_;
  std::vector<Lane> lanes_;
  std::vector<Route> routes_;
  Box junction_box_;
  std::array<std::array<int, kLanesPerCarriageway>, 4> approach_ids_{};
  std::array<std::array<int, kLanesPerCarriageway>, 4> exit_ids_{};
};

/// Deterministic four-arm, two-lanes-per-direction junction centered at the origin.
/// Throws std::invalid_argument on non-positive dimensions, a junction too small to
/// hold both carriageways, or a start window that does not fit the approach.
RoadNetwork build_intersection(const RoadConfig& config);

struct EpisodeEndpoints {
  int start_lane = 0;       // approach lane id in the lower zone
  double start_s = 0.0;     // arc length along the start lane
  Vec2 start_position;
  double start_heading = 0.0;
  Zone goal_zone = Zone::kUpper;
  int goal_index = 0;
  int goal_lane = 0;        // exit lane id
  Vec2 goal_point;
};

EpisodeEndpoints sample_episode_endpoints(Rng& rng, const RoadNetwork& network);

Centerline::Projection project_to_lane(Vec2 position, const Lane& lane);
double lane_heading_at(const Lane& lane, double s);

}  // namespace cppo
