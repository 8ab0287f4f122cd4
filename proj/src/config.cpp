#include "cppo/config.hpp"

#include <zlib.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace cppo {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view text) {
  text = trim(text);
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError("expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("expected true or false, got '" + std::string(text) + "'");
}

std::string parse_string(std::string_view text) {
  text = trim(text);
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') return std::string(text.substr(1, text.size() - 2));
  return std::string(text);
}

// Flattens `[a, b]` or `[[a, b], [c, d]]` into its scalar items.
std::vector<std::string_view> list_items(std::string_view text) {
  text = trim(text);
  if (text.empty() || text.front() != '[' || text.back() != ']') {
    throw ConfigError("expected a bracketed list, got '" + std::string(text) + "'");
  }
  std::vector<std::string_view> items;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    const auto item = trim(text.substr(start, end - start));
    if (!item.empty()) items.push_back(item);
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '[' || c == ']' || c == ',') {
      flush(i);
      start = i + 1;
    }
  }
  return items;
}

template <typename T>
std::vector<T> parse_list(std::string_view text) {
  std::vector<T> out;
  for (auto item : list_items(text)) out.push_back(parse_number<T>(item));
  return out;
}

template <typename T>
std::string format_list(const std::vector<T>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out + "]";
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

// Fields of nested structs go through an accessor returning a reference.
template <typename T>
Field nested(std::string key, std::function<T&(RunConfig&)> ref) {
  auto get = [ref](const RunConfig& c) {
    T& value = ref(const_cast<RunConfig&>(c));
    if constexpr (std::is_same_v<T, bool>) {
      return std::string(value ? "true" : "false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return "\"" + value + "\"";
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(value);
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(value);
    } else {
      return format_list(value);
    }
  };
  auto set = [ref](RunConfig& c, std::string_view text) {
    T& value = ref(c);
    if constexpr (std::is_same_v<T, bool>) {
      value = parse_bool(text);
    } else if constexpr (std::is_same_v<T, std::string>) {
      value = parse_string(text);
    } else if constexpr (std::is_arithmetic_v<T>) {
      value = parse_number<T>(text);
    } else {
      value = parse_list<typename T::value_type>(text);
    }
  };
  return {std::move(key), get, set};
}

#define CPPO_FIELD(key, type, expr) nested<type>(key, [](RunConfig& c) -> type& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(CPPO_FIELD("run.seed", std::uint64_t, c.seed));
    f.push_back(CPPO_FIELD("run.output_dir", std::string, c.output_dir));
    f.push_back(CPPO_FIELD("run.jobs", int, c.jobs));
    f.push_back(CPPO_FIELD("run.checkpoint_every", int, c.checkpoint_every));
    f.push_back(CPPO_FIELD("run.record_wall_time", bool, c.record_wall_time));

    f.push_back(CPPO_FIELD("road.lane_width_m", double, c.road.lane_width_m));
    f.push_back(CPPO_FIELD("road.approach_length_m", double, c.road.approach_length_m));
    f.push_back(CPPO_FIELD("road.junction_half_size_m", double, c.road.junction_half_size_m));
    f.push_back(CPPO_FIELD("road.start_window_min_m", double, c.road.start_window_min_m));
    f.push_back(CPPO_FIELD("road.start_window_max_m", double, c.road.start_window_max_m));
    f.push_back(CPPO_FIELD("road.goal_distance_m", double, c.road.goal_distance_m));

    f.push_back(CPPO_FIELD("dynamics.delta_v", double, c.env.dynamics.delta_v));
    f.push_back(CPPO_FIELD("dynamics.v_max", double, c.env.dynamics.v_max));
    f.push_back(CPPO_FIELD("dynamics.gain_speed", double, c.env.dynamics.gain_speed));
    f.push_back(CPPO_FIELD("dynamics.gain_heading", double, c.env.dynamics.gain_heading));
    f.push_back(CPPO_FIELD("dynamics.gain_lateral", double, c.env.dynamics.gain_lateral));
    f.push_back(CPPO_FIELD("dynamics.gain_offset", double, c.env.dynamics.gain_offset));
    f.push_back(CPPO_FIELD("dynamics.v_floor", double, c.env.dynamics.v_floor));
    f.push_back(CPPO_FIELD("dynamics.wheelbase_m", double, c.env.dynamics.wheelbase_m));
    f.push_back(CPPO_FIELD("dynamics.vehicle_length_m", double, c.env.dynamics.vehicle_length_m));
    f.push_back(CPPO_FIELD("dynamics.vehicle_width_m", double, c.env.dynamics.vehicle_width_m));

    f.push_back(CPPO_FIELD("idm.v0", double, c.env.traffic.idm.v0));
    f.push_back(CPPO_FIELD("idm.time_headway", double, c.env.traffic.idm.time_headway));
    f.push_back(CPPO_FIELD("idm.a_max", double, c.env.traffic.idm.a_max));
    f.push_back(CPPO_FIELD("idm.b_comf", double, c.env.traffic.idm.b_comf));
    f.push_back(CPPO_FIELD("idm.s0", double, c.env.traffic.idm.s0));
    f.push_back(CPPO_FIELD("idm.delta_exp", double, c.env.traffic.idm.delta_exp));

    f.push_back(Field{"traffic.speed_init_range",
                      [](const RunConfig& c) {
                        return format_list(std::vector<double>{c.env.traffic.speed_init_min, c.env.traffic.speed_init_max});
                      },
                      [](RunConfig& c, std::string_view v) {
                        const auto r = parse_list<double>(v);
                        if (r.size() != 2) throw ConfigError("traffic.speed_init_range needs two values");
                        c.env.traffic.speed_init_min = r[0];
                        c.env.traffic.speed_init_max = r[1];
                      }});
    f.push_back(CPPO_FIELD("traffic.lookahead_m", double, c.env.traffic.lookahead_m));
    f.push_back(CPPO_FIELD("traffic.conflict_distance_m", double, c.env.traffic.conflict_distance_m));
    f.push_back(CPPO_FIELD("traffic.conflict_clearance_m", double, c.env.traffic.conflict_clearance_m));
    f.push_back(CPPO_FIELD("traffic.tie_tolerance_m", double, c.env.traffic.tie_tolerance_m));
    f.push_back(CPPO_FIELD("traffic.spawn_first_slot_m", double, c.env.traffic.spawn_first_slot_m));
    f.push_back(CPPO_FIELD("traffic.spawn_spacing_m", double, c.env.traffic.spawn_spacing_m));
    f.push_back(CPPO_FIELD("traffic.spawn_jitter_m", double, c.env.traffic.spawn_jitter_m));

    f.push_back(CPPO_FIELD("env.sim_hz", double, c.env.sim_hz));
    f.push_back(CPPO_FIELD("env.t_max_s", double, c.env.t_max_s));
    f.push_back(CPPO_FIELD("env.goal_radius_m", double, c.env.goal_radius_m));
    f.push_back(CPPO_FIELD("env.max_vehicles", int, c.env.max_vehicles));
    f.push_back(CPPO_FIELD("env.position_scale_m", double, c.env.position_scale_m));
    f.push_back(CPPO_FIELD("env.velocity_scale_mps", double, c.env.velocity_scale_mps));
    f.push_back(CPPO_FIELD("env.offroad_margin_m", double, c.env.offroad_margin_m));
    f.push_back(CPPO_FIELD("env.ego_initial_speed", double, c.env.ego_initial_speed));
    f.push_back(CPPO_FIELD("env.w_success", double, c.env.reward.w_success));
    f.push_back(CPPO_FIELD("env.alpha_n", double, c.env.reward.alpha_n));
    f.push_back(CPPO_FIELD("env.alpha_t", double, c.env.reward.alpha_t));
    f.push_back(CPPO_FIELD("env.w_collision", double, c.env.reward.w_collision));
    f.push_back(CPPO_FIELD("env.beta_n", double, c.env.reward.beta_n));
    f.push_back(CPPO_FIELD("env.beta_v", double, c.env.reward.beta_v));
    f.push_back(CPPO_FIELD("env.w_timeout", double, c.env.reward.w_timeout));
    f.push_back(CPPO_FIELD("env.w_offroad", double, c.env.reward.w_offroad));
    f.push_back(CPPO_FIELD("env.w_lane_change", double, c.env.reward.w_lane_change));
    f.push_back(CPPO_FIELD("env.w_live", double, c.env.reward.w_live));
    f.push_back(CPPO_FIELD("env.w_accel", double, c.env.reward.w_accel));
    f.push_back(CPPO_FIELD("env.n_sparse", int, c.env.reward.n_sparse));
    f.push_back(CPPO_FIELD("env.accel_term", bool, c.env.reward.accel_term));

    f.push_back(CPPO_FIELD("nn.actor_hidden", int, c.nn.actor_hidden));
    f.push_back(CPPO_FIELD("nn.critic_hidden", int, c.nn.critic_hidden));

    f.push_back(CPPO_FIELD("ppo.gamma", double, c.ppo.gamma));
    f.push_back(CPPO_FIELD("ppo.gae_lambda", double, c.ppo.gae_lambda));
    f.push_back(CPPO_FIELD("ppo.epochs", int, c.ppo.epochs));
    f.push_back(CPPO_FIELD("ppo.minibatch_size", int, c.ppo.minibatch_size));
    f.push_back(CPPO_FIELD("ppo.rollout_steps", int, c.ppo.rollout_steps));
    f.push_back(CPPO_FIELD("ppo.value_coef", double, c.ppo.value_coef));
    f.push_back(CPPO_FIELD("ppo.entropy_coef", double, c.ppo.entropy_coef));
    f.push_back(CPPO_FIELD("ppo.actor_lr", double, c.ppo.actor_lr));
    f.push_back(CPPO_FIELD("ppo.critic_lr", double, c.ppo.critic_lr));
    f.push_back(CPPO_FIELD("ppo.max_grad_norm", double, c.ppo.max_grad_norm));
    f.push_back(CPPO_FIELD("ppo.adam_beta1", double, c.ppo.adam.beta1));
    f.push_back(CPPO_FIELD("ppo.adam_beta2", double, c.ppo.adam.beta2));
    f.push_back(CPPO_FIELD("ppo.adam_eps", double, c.ppo.adam.eps));

    f.push_back(CPPO_FIELD("curriculum.enabled", bool, c.curriculum.enabled));
    f.push_back(CPPO_FIELD("curriculum.switch_episodes", std::vector<std::uint64_t>, c.curriculum.switch_episodes));
    f.push_back(CPPO_FIELD("curriculum.stage3_eps_switch", std::uint64_t, c.curriculum.stage3_eps_switch));
    f.push_back(CPPO_FIELD("curriculum.epsilons", std::vector<double>, c.curriculum.epsilons));
    f.push_back(Field{"curriculum.nsv_ranges",
                      [](const RunConfig& c) {
                        std::string out = "[";
                        for (std::size_t i = 0; i < c.curriculum.nsv_ranges.size(); ++i) {
                          if (i) out += ", ";
                          out += "[" + std::to_string(c.curriculum.nsv_ranges[i].lo) + ", " +
                                 std::to_string(c.curriculum.nsv_ranges[i].hi) + "]";
                        }
                        return out + "]";
                      },
                      [](RunConfig& c, std::string_view v) {
                        const auto flat = parse_list<int>(v);
                        if (flat.size() % 2 != 0) throw ConfigError("curriculum.nsv_ranges needs [lo, hi] pairs");
                        c.curriculum.nsv_ranges.clear();
                        for (std::size_t i = 0; i < flat.size(); i += 2) c.curriculum.nsv_ranges.push_back({flat[i], flat[i + 1]});
                      }});
    f.push_back(CPPO_FIELD("curriculum.total_episodes", std::uint64_t, c.curriculum.total_episodes));
    f.push_back(CPPO_FIELD("curriculum.fixed_epsilon", double, c.curriculum.fixed_epsilon));

    f.push_back(CPPO_FIELD("eval.episodes", int, c.eval.episodes));
    f.push_back(CPPO_FIELD("eval.nsv_list", std::vector<int>, c.eval.nsv_list));
    f.push_back(CPPO_FIELD("eval.seed", std::uint64_t, c.eval.seed));
    f.push_back(CPPO_FIELD("eval.greedy", bool, c.eval.greedy));
    return f;
  }();
  return table;
}

#undef CPPO_FIELD

const Field& field_for(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

// Strips a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

}  // namespace

RunConfig parse_config(std::string_view text, RunConfig config) {
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string name(trim(line.substr(0, eq)));
    const std::string key = section.empty() || name.find('.') != std::string::npos ? name : section + "." + name;
    try {
      field_for(key).set(config, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig config = parse_config(buffer.str());
  validate(config);
  return config;
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must be key=value: " + std::string(assignment));
  field_for(trim(assignment.substr(0, eq))).set(config, assignment.substr(eq + 1));
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.push_back(f.key);
  return keys;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(c.jobs >= 1, "run.jobs must be >= 1");
  require(c.checkpoint_every >= 1, "run.checkpoint_every must be >= 1");
  require(c.ppo.gamma > 0.0 && c.ppo.gamma < 1.0, "ppo.gamma must lie in (0, 1)");
  require(c.ppo.gae_lambda >= 0.0 && c.ppo.gae_lambda <= 1.0, "ppo.gae_lambda must lie in [0, 1]");
  require(c.ppo.epochs > 0 && c.ppo.minibatch_size > 0 && c.ppo.rollout_steps > 0, "ppo sizes must be positive");
  require(c.ppo.actor_lr > 0.0 && c.ppo.critic_lr > 0.0, "learning rates must be positive");
  require(c.nn.actor_hidden > 0 && c.nn.critic_hidden > 0, "hidden layer sizes must be positive");
  require(c.env.max_vehicles >= 0, "env.max_vehicles must be >= 0");
  require(c.env.sim_hz > 0.0 && c.env.t_max_s > 0.0, "env.sim_hz and env.t_max_s must be positive");
  require(c.env.dynamics.v_max > 0.0 && c.env.dynamics.delta_v > 0.0, "dynamics speeds must be positive");
  require(c.env.traffic.speed_init_min >= 0.0 && c.env.traffic.speed_init_min <= c.env.traffic.speed_init_max,
          "traffic.speed_init_range must be an ordered non-negative pair");
  const auto& cur = c.curriculum;
  require(cur.total_episodes > 0, "curriculum.total_episodes must be positive");
  require(cur.fixed_epsilon > 0.0 && cur.fixed_epsilon < 1.0, "curriculum.fixed_epsilon must lie in (0, 1)");
  require(cur.nsv_ranges.size() == 3, "curriculum.nsv_ranges needs three stages");
  require(cur.epsilons.size() == 3, "curriculum.epsilons needs three values");
  require(cur.switch_episodes.size() == 2, "curriculum.switch_episodes needs two values");
  for (const NsvRange& r : cur.nsv_ranges) require(r.lo >= 0 && r.lo <= r.hi, "nsv range must satisfy 0 <= lo <= hi");
  for (double e : cur.epsilons) require(e > 0.0 && e < 1.0, "epsilons must lie in (0, 1)");
  require(cur.switch_episodes[0] <= cur.switch_episodes[1] && cur.switch_episodes[1] <= cur.stage3_eps_switch,
          "curriculum switch points must be ordered");
  require(c.eval.episodes >= 1, "eval.episodes must be >= 1");
}

std::uint32_t config_digest(const RunConfig& config) {
  const std::string text = serialize_config(config);
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

}  // namespace cppo
