#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cppo/env.hpp"
#include "cppo/ppo.hpp"
#include "cppo/road_net.hpp"

namespace cppo {

struct CurriculumConfig {
  bool enabled = true;
  std::vector<std::uint64_t> switch_episodes{2000, 5000};
  std::uint64_t stage3_eps_switch = 6000;
  std::vector<double> epsilons{0.25, 0.20, 0.15};
  std::vector<NsvRange> nsv_ranges{{0, 0}, {1, 3}, {4, 8}};
  std::uint64_t total_episodes = 8000;
  double fixed_epsilon = 0.15;  // used when the curriculum is disabled
};

struct NetworkConfig {
  int actor_hidden = 128;
  int critic_hidden = 64;
};

struct EvalConfig {
  int episodes = 200;
  std::vector<int> nsv_list{0, 1, 2, 3, 4, 5, 6};
  std::uint64_t seed = 12345;
  bool greedy = true;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";
  int jobs = 1;
  int checkpoint_every = 10;  // updates between rolling checkpoints
  bool record_wall_time = false;

  RoadConfig road;
  EnvConfig env;
  NetworkConfig nn;
  PpoConfig ppo;
  CurriculumConfig curriculum;
  EvalConfig eval;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses sectioned `key = value` text. Keys are `section.name`; unknown keys,
/// malformed lines and bad values throw ConfigError naming the line.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `section.key=value` override on top of `config`.
void apply_override(RunConfig& config, std::string_view assignment);

/// Every key with its current value, grouped by section; parse_config(serialize) == config.
std::string serialize_config(const RunConfig& config);

/// All recognised keys, in serialization order.
std::vector<std::string> config_keys();

/// Throws ConfigError if values are out of range.
void validate(const RunConfig& config);

/// CRC-32 of the serialized config.
std::uint32_t config_digest(const RunConfig& config);

}  // namespace cppo
