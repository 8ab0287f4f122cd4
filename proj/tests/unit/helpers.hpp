#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cppo/config.hpp"
#include "cppo/env.hpp"
#include "cppo/traffic.hpp"

namespace cppo::test {

// A vehicle standing on `route` at arc length `progress`, on its centerline.
inline Vehicle place(const RoadNetwork& net, Zone from, Zone to, int index, double progress, double v, int id) {
  const Route& r = net.route(from, to, index);
  Vehicle veh;
  veh.id = id;
  VehicleState& s = veh.state;
  s.from = from;
  s.to = to;
  s.target_lane_index = index;
  s.segment = progress >= r.offsets[2] ? 2 : progress >= r.offsets[1] ? 1 : 0;
  s.progress = progress;
  const auto pose = net.pose_along(r, progress);
  s.x = pose.position.x;
  s.y = pose.position.y;
  s.psi = pose.heading;
  s.v = v;
  s.target_speed = v;
  return veh;
}

inline const RoadNetwork& default_network() {
  static const RoadNetwork net = build_intersection({});
  return net;
}

inline const ConflictTable& default_conflicts() {
  static const ConflictTable table(default_network(), TrafficConfig{}.conflict_distance_m);
  return table;
}

// Empty scratch directory under the system temp dir.
inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "cppo_unit" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Ten episodes, stages switching at 3 and 6, small networks: runs in well under a second.
inline RunConfig tiny_run_config() {
  RunConfig c;
  c.seed = 3;
  c.checkpoint_every = 1;
  c.curriculum.total_episodes = 10;
  c.curriculum.switch_episodes = {3, 6};
  c.curriculum.stage3_eps_switch = 8;
  c.nn.actor_hidden = 16;
  c.nn.critic_hidden = 8;
  c.ppo.rollout_steps = 64;
  c.ppo.epochs = 2;
  c.ppo.minibatch_size = 32;
  return c;
}

}  // namespace cppo::test
