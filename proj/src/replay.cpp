#include "cppo/replay.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "cppo/collision.hpp"
#include "cppo/csv.hpp"

namespace cppo {

namespace {

using nlohmann::json;

Action parse_action(const std::string& name) {
  for (int a = 0; a < kNumActions; ++a) {
    if (action_name(static_cast<Action>(a)) == name) return static_cast<Action>(a);
  }
  throw ReplayError("unknown action '" + name + "'");
}

VehiclePose pose_of(const Vehicle& v) {
  return {v.id, v.ego, v.state.x, v.state.y, v.state.psi, v.state.v, v.state.length, v.state.width};
}

}  // namespace

std::vector<VehiclePose> world_poses(const IntersectionEnv& env) {
  std::vector<VehiclePose> out{pose_of(env.ego())};
  for (const Vehicle& v : env.surrounding()) out.push_back(pose_of(v));
  return out;
}

std::string record_episode(const RunConfig& config, const ActionSelector& select, int n_sv, std::uint64_t seed,
                           std::uint64_t episode) {
  const RoadNetwork network = build_intersection(config.road);
  const ConflictTable conflicts(network, config.env.traffic.conflict_distance_m);
  IntersectionEnv env(network, conflicts, config.env);
  ReplayLog log;
  log.header = ReplayHeader{seed, static_cast<int>(Stream::kEval), episode, {n_sv, n_sv}, serialize_config(config)};
  Rng env_rng = make_rng(seed, Stream::kEval, episode);
  Rng action_rng = make_rng(seed, Stream::kPolicy, episode);
  StateMatrix obs = env.reset({n_sv, n_sv}, env_rng);
  int t = 0;
  while (true) {
    const Action action = select(obs, action_rng);
    const StepResult step = env.step(action);
    log.steps.push_back({++t, action, step.reward.total, step.outcome, world_poses(env)});
    if (step.outcome != Outcome::kRunning) break;
    obs = step.observation;
  }
  return format_replay(log);
}

std::string format_replay(const ReplayLog& log) {
  std::string out;
  if (log.header) {
    const ReplayHeader& h = *log.header;
    nlohmann::ordered_json j;
    j["type"] = "header";
    j["seed"] = h.seed;
    j["stream"] = h.stream;
    j["episode"] = h.episode;
    j["n_sv"] = {h.range.lo, h.range.hi};
    j["config"] = h.config_text;
    out += j.dump() + "\n";
  }
  for (const ReplayStep& s : log.steps) {
    nlohmann::ordered_json j;
    j["type"] = "step";
    j["t"] = s.t;
    j["action"] = std::string(action_name(s.action));
    j["reward"] = s.reward;
    j["outcome"] = std::string(outcome_name(s.outcome));
    auto& vs = j["vehicles"] = nlohmann::ordered_json::array();
    for (const VehiclePose& p : s.vehicles) {
      vs.push_back({{"id", p.id},
                    {"ego", p.ego},
                    {"x", p.x},
                    {"y", p.y},
                    {"psi", p.psi},
                    {"v", p.v},
                    {"length", p.length},
                    {"width", p.width}});
    }
    out += j.dump() + "\n";
  }
  return out;
}

ReplayLog parse_replay(const std::string& text) {
  ReplayLog log;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type");
      if (type == "header") {
        if (log.header || !log.steps.empty()) throw ReplayError("header must be the first record");
        ReplayHeader h;
        h.seed = j.at("seed");
        h.stream = j.at("stream");
        h.episode = j.at("episode");
        h.range = {j.at("n_sv").at(0), j.at("n_sv").at(1)};
        h.config_text = j.at("config");
        log.header = h;
      } else if (type == "step") {
        ReplayStep s;
        s.t = j.at("t");
        s.action = parse_action(j.at("action"));
        s.reward = j.at("reward");
        s.outcome = parse_outcome(j.at("outcome").get<std::string>());
        for (const json& v : j.at("vehicles")) {
          s.vehicles.push_back({v.at("id"), v.at("ego"), v.at("x"), v.at("y"), v.at("psi"), v.at("v"),
                                v.at("length"), v.at("width")});
        }
        log.steps.push_back(std::move(s));
      } else {
        throw ReplayError("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw ReplayError("replay line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

ResimResult resimulate(const ReplayLog& log) {
  if (!log.header) throw ReplayError("replay log has no header; cannot re-simulate");
  const ReplayHeader& h = *log.header;
  const RunConfig config = parse_config(h.config_text);
  const RoadNetwork network = build_intersection(config.road);
  const ConflictTable conflicts(network, config.env.traffic.conflict_distance_m);
  IntersectionEnv env(network, conflicts, config.env);
  Rng rng = make_rng(h.seed, static_cast<Stream>(h.stream), h.episode);
  env.reset(h.range, rng);
  ResimResult r;
  for (const ReplayStep& s : log.steps) {
    const StepResult step = env.step(s.action);
    ++r.steps;
    r.outcome = step.outcome;
    const auto poses = world_poses(env);
    if (poses.size() != s.vehicles.size()) {
      r.max_pose_error = INFINITY;
    } else {
      for (std::size_t i = 0; i < poses.size(); ++i) {
        r.max_pose_error = std::max({r.max_pose_error, std::abs(poses[i].x - s.vehicles[i].x),
                                     std::abs(poses[i].y - s.vehicles[i].y)});
      }
    }
    if (step.outcome != Outcome::kRunning) break;
  }
  return r;
}

std::string snapshot_svg(const RoadNetwork& network, const ReplayStep& step) {
  const RoadConfig& rc = network.config();
  const double extent = rc.junction_half_size_m + rc.approach_length_m + 4.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"" << format_number(-extent)
      << ' ' << format_number(-extent) << ' ' << format_number(2 * extent) << ' ' << format_number(2 * extent)
      << "\">\n";
  svg << "<rect x=\"" << format_number(-extent) << "\" y=\"" << format_number(-extent) << "\" width=\""
      << format_number(2 * extent) << "\" height=\"" << format_number(2 * extent) << "\" fill=\"#e8efe0\"/>\n";
  // world y points up; SVG y points down
  svg << "<g transform=\"scale(1,-1)\">\n";
  for (const Lane& lane : network.lanes()) {
    svg << "<polyline fill=\"none\" stroke=\"#9a9a9a\" stroke-width=\"" << format_number(lane.width) << "\" points=\"";
    const double len = lane.centerline.length();
    const int n = std::max(2, static_cast<int>(std::ceil(len / 1.0)) + 1);
    for (int i = 0; i < n; ++i) {
      const Vec2 p = lane.centerline.point_at(len * i / (n - 1));
      svg << format_number(p.x) << ',' << format_number(p.y) << ' ';
    }
    svg << "\"/>\n";
  }
  for (const VehiclePose& v : step.vehicles) {
    const OrientedRect rect{{v.x, v.y}, v.psi, v.length, v.width};
    svg << "<polygon fill=\"" << (v.ego ? "#d62728" : "#1f77b4") << "\" stroke=\"black\" stroke-width=\"0.2\" points=\"";
    for (const Vec2& c : rect.corners()) svg << format_number(c.x) << ',' << format_number(c.y) << ' ';
    svg << "\"/>\n";
  }
  svg << "</g>\n";
  svg << "<text x=\"" << format_number(-extent + 2) << "\" y=\"" << format_number(-extent + 6)
      << "\" font-size=\"4\" font-family=\"monospace\">t=" << step.t << " action=" << action_name(step.action)
      << " outcome=" << outcome_name(step.outcome) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cppo
