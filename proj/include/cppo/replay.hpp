#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cppo/config.hpp"
#include "cppo/harness.hpp"

namespace cppo {

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VehiclePose {
  int id = 0;
  bool ego = false;
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;
  double length = 0.0;
  double width = 0.0;
};

struct ReplayHeader {
  std::uint64_t seed = 0;
  int stream = static_cast<int>(Stream::kEval);
  std::uint64_t episode = 0;
  NsvRange range;
  std::string config_text;  // serialized RunConfig of the recording run
};

struct ReplayStep {
  int t = 0;  // 1-based step count
  Action action = Action::kKeep;
  double reward = 0.0;
  Outcome outcome = Outcome::kRunning;
  std::vector<VehiclePose> vehicles;  // ego first
};

/// JSON Lines: one header object, then one object per step.
struct ReplayLog {
  std::optional<ReplayHeader> header;
  std::vector<ReplayStep> steps;
};

std::vector<VehiclePose> world_poses(const IntersectionEnv& env);

/// Plays one episode (same scenario as `evaluate` episode `episode` of a cell
/// seeded with `seed`) and returns it as log text.
std::string record_episode(const RunConfig& config, const ActionSelector& select, int n_sv, std::uint64_t seed,
                           std::uint64_t episode);

std::string format_replay(const ReplayLog& log);
/// Empty text gives an empty log. Throws ReplayError naming the line on bad input.
ReplayLog parse_replay(const std::string& text);

struct ResimResult {
  Outcome outcome = Outcome::kRunning;
  int steps = 0;
  double max_pose_error = 0.0;  // largest |dx|, |dy| against the logged poses
};

/// Re-runs the logged actions from the logged seed and config.
/// Throws ReplayError if the log has no header.
ResimResult resimulate(const ReplayLog& log);

/// Top-down view: lanes as grey strips, vehicles as rectangles, ego in red.
std::string snapshot_svg(const RoadNetwork& network, const ReplayStep& step);

}  // namespace cppo
