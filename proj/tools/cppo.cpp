// cppo: train / eval / plot / replay front end.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cppo/checkpoint.hpp"
#include "cppo/config.hpp"
#include "cppo/csv.hpp"
#include "cppo/curriculum.hpp"
#include "cppo/harness.hpp"
#include "cppo/plot.hpp"
#include "cppo/replay.hpp"

namespace fs = std::filesystem;
using namespace cppo;

namespace {

constexpr int kUsage = 1;
constexpr int kFailure = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_root(const fs::path& dir) {
  if (dir.is_absolute()) return dir;
  if (const char* root = std::getenv("CPPO_OUTPUT_ROOT"); root && *root) return fs::path(root) / dir;
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TrainArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> fixed_epsilon;
  bool no_curriculum = false;
  std::optional<int> jobs;
  std::optional<std::uint64_t> episodes;
  std::vector<std::string> overrides;
  std::string output;
  std::optional<std::uint64_t> stop_after;
  std::string resume;
  bool quiet = false;
};

void print_update(const UpdateRecord& r) {
  int succ = 0;
  double ret = 0.0;
  for (const auto& e : r.episodes) {
    succ += e.outcome == Outcome::kSuccess;
    ret += e.episode_return;
  }
  const double n = static_cast<double>(r.episodes.size());
  std::printf("update %5llu  stage %d  eps %.2f  episodes %6llu-%-6llu  success %5.1f%%  return %8.3f  clip %.3f\n",
              static_cast<unsigned long long>(r.update_index), r.stage, r.epsilon,
              static_cast<unsigned long long>(r.first_episode),
              static_cast<unsigned long long>(r.first_episode + r.episodes.size() - 1), 100.0 * succ / n, ret / n,
              r.metrics.clip_fraction);
  std::fflush(stdout);
}

int cmd_train(const TrainArgs& a) {
  if (a.fixed_epsilon && !a.no_curriculum) throw UsageError("--fixed-epsilon requires --no-curriculum");
  std::optional<Trainer> trainer;
  if (!a.resume.empty()) {
    if (!a.config_path.empty() || a.seed || a.fixed_epsilon || a.no_curriculum || !a.overrides.empty() ||
        a.episodes) {
      throw UsageError("--resume takes its configuration from the checkpoint; drop the config options");
    }
    const fs::path ckpt(a.resume);
    const fs::path dir = a.output.empty() ? ckpt.parent_path() : output_root(a.output);
    trainer.emplace(Trainer::resume(ckpt, dir, a.jobs.value_or(1)));
  } else {
    RunConfig config = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
    for (const auto& o : a.overrides) apply_override(config, o);
    if (a.seed) config.seed = *a.seed;
    if (a.jobs) config.jobs = *a.jobs;
    if (a.episodes) config.curriculum.total_episodes = *a.episodes;
    if (a.no_curriculum) config.curriculum.enabled = false;
    if (a.fixed_epsilon) config.curriculum.fixed_epsilon = *a.fixed_epsilon;
    if (!a.output.empty()) config.output_dir = a.output;
    validate(config);
    trainer.emplace(config, output_root(config.output_dir));
  }
  if (!a.quiet) trainer->hooks.on_update = [](const UpdateRecord& r, const ActorCritic&) { print_update(r); };
  const TrainRunState s = trainer->run(a.stop_after);
  std::printf("stopped at episode %llu after %llu updates (stage %d)\n", static_cast<unsigned long long>(s.episode),
              static_cast<unsigned long long>(s.update_index), s.stage);
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::vector<int> nsv;
  std::optional<int> episodes;
  std::optional<std::uint64_t> seed;
  bool stochastic = false;
  int jobs = 1;
  std::string output;
  std::string record;
};

int cmd_eval(const EvalArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  RunConfig config = parse_config(ckpt.meta.config_text);
  const std::vector<int> nsv = a.nsv.empty() ? config.eval.nsv_list : a.nsv;
  const int episodes = a.episodes.value_or(config.eval.episodes);
  const std::uint64_t seed = a.seed.value_or(config.eval.seed);
  const bool greedy = a.stochastic ? false : config.eval.greedy;
  if (episodes < 1) throw UsageError("--episodes must be at least 1");
  for (int n : nsv) {
    if (n < 0) throw UsageError("N_sv values must be non-negative");
  }

  const RoadNetwork network = build_intersection(config.road);
  const ConflictTable conflicts(network, config.env.traffic.conflict_distance_m);
  const EvalSetup setup{&network, &conflicts, config.env, std::max(1, a.jobs)};
  const ActionSelector select = policy_selector(ckpt.policy, greedy);
  const auto reports = sweep(setup, select, nsv, episodes, seed);

  std::cout << report_table(reports);
  const fs::path dir = output_root(a.output.empty() ? fs::path(a.checkpoint).parent_path() / "eval" : fs::path(a.output));
  write_file(dir / "eval.csv", report_csv(reports));
  write_file(dir / "eval.json", report_json(reports));
  write_file(dir / "eval.txt", report_table(reports));
  std::cout << "reports written to " << dir.string() << "\n";

  if (!a.record.empty()) {
    const fs::path rec = output_root(a.record);
    for (int n : nsv) {
      const fs::path file = rec / ("episode_nsv" + std::to_string(n) + ".jsonl");
      write_file(file, record_episode(config, select, n, sweep_cell_seed(seed, n), 0));
    }
    std::cout << "replay logs written to " << rec.string() << "\n";
  }
  return 0;
}

struct PlotArgs {
  std::vector<std::string> csvs;
  std::vector<std::string> labels;
  std::string out = "training.svg";
  int window = 101;
  int order = 2;
};

int cmd_plot(const PlotArgs& a) {
  if (!a.labels.empty() && a.labels.size() != a.csvs.size()) throw UsageError("give one --label per CSV");
  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < a.csvs.size(); ++i) {
    const std::string label = a.labels.empty() ? fs::path(a.csvs[i]).parent_path().filename().string() : a.labels[i];
    series.push_back(load_training_series(a.csvs[i], label.empty() ? a.csvs[i] : label, a.window, a.order));
  }
  const fs::path out = output_root(a.out);
  write_file(out, training_svg(series));
  fs::path smoothed = out;
  smoothed.replace_extension();
  smoothed += "_smoothed.csv";
  write_file(smoothed, smoothed_csv(series));
  std::cout << "wrote " << out.string() << " and " << smoothed.string() << "\n";
  return 0;
}

struct ReplayArgs {
  std::string log;
  std::string frames;
  bool verify = true;
};

int cmd_replay(const ReplayArgs& a) {
  const ReplayLog log = parse_replay(read_file(a.log));
  if (log.steps.empty()) {
    std::cout << "empty replay log, nothing to do\n";
    return 0;
  }
  const RunConfig config = log.header ? parse_config(log.header->config_text) : RunConfig{};
  const RoadNetwork network = build_intersection(config.road);
  fs::path frames = a.frames.empty() ? fs::path(a.log).replace_extension("") += "_frames" : fs::path(a.frames);
  frames = output_root(frames);
  fs::create_directories(frames);
  for (const ReplayStep& s : log.steps) {
    std::printf("t=%d action=%s reward=%.4f outcome=%s\n", s.t, std::string(action_name(s.action)).c_str(), s.reward,
                std::string(outcome_name(s.outcome)).c_str());
    for (const VehiclePose& v : s.vehicles) {
      std::printf("  %s %3d x=%9.3f y=%9.3f psi=%7.3f v=%6.3f\n", v.ego ? "ego" : "sv ", v.id, v.x, v.y, v.psi, v.v);
    }
    char name[32];
    std::snprintf(name, sizeof name, "step_%04d.svg", s.t);
    write_file(frames / name, snapshot_svg(network, s));
  }
  std::cout << log.steps.size() << " snapshots written to " << frames.string() << "\n";
  if (a.verify && log.header) {
    const ResimResult r = resimulate(log);
    const Outcome logged = log.steps.back().outcome;
    std::printf("re-simulated outcome: %s (logged %s), max pose error %.3g m\n",
                std::string(outcome_name(r.outcome)).c_str(), std::string(outcome_name(logged)).c_str(),
                r.max_pose_error);
    if (r.outcome != logged) {
      std::cerr << "error: re-simulation does not reproduce the logged outcome\n";
      return kFailure;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum PPO for unsignalized intersection crossing"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a policy (curriculum by default)");
  train->add_option("--config", ta.config_path, "config file (sectioned key = value)");
  train->add_option("--seed", ta.seed, "random seed");
  train->add_option("--fixed-epsilon", ta.fixed_epsilon, "constant clipping parameter (with --no-curriculum)");
  train->add_flag("--no-curriculum", ta.no_curriculum, "train every episode in the hardest stage");
  train->add_option("--jobs", ta.jobs, "parallel rollout episodes")->check(CLI::PositiveNumber);
  train->add_option("--episodes", ta.episodes, "total episode budget");
  train->add_option("--set", ta.overrides, "override a key, e.g. --set ppo.epochs=10");
  train->add_option("--output", ta.output, "output directory");
  train->add_option("--stop-after-episodes", ta.stop_after, "stop at the first update boundary past N episodes");
  train->add_option("--resume", ta.resume, "continue from a checkpoint");
  train->add_flag("--quiet", ta.quiet, "no per-update progress lines");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint over N_sv cells");
  eval->add_option("checkpoint", ea.checkpoint, "checkpoint file")->required();
  eval->add_option("--nsv", ea.nsv, "N_sv values (default 0..6)")->delimiter(',');
  eval->add_option("--episodes", ea.episodes, "episodes per cell (default 200)");
  eval->add_option("--seed", ea.seed, "base seed");
  eval->add_flag("--stochastic", ea.stochastic, "sample actions instead of argmax");
  eval->add_option("--jobs", ea.jobs, "parallel episodes")->check(CLI::PositiveNumber);
  eval->add_option("--output", ea.output, "report directory (default: <checkpoint dir>/eval)");
  eval->add_option("--record", ea.record, "write a replay log of episode 0 of each cell into this directory");

  PlotArgs pa;
  auto* plot = app.add_subcommand("plot", "plot training returns");
  plot->add_option("csv", pa.csvs, "training.csv files")->required();
  plot->add_option("--label", pa.labels, "legend label per CSV");
  plot->add_option("--out", pa.out, "output SVG");
  plot->add_option("--window", pa.window, "Savitzky-Golay window (odd)");
  plot->add_option("--order", pa.order, "Savitzky-Golay polynomial order");

  ReplayArgs ra;
  auto* replay = app.add_subcommand("replay", "print and draw a recorded episode");
  replay->add_option("log", ra.log, "replay log (.jsonl)")->required();
  replay->add_option("--frames", ra.frames, "directory for SVG snapshots");
  replay->add_flag("!--no-verify", ra.verify, "skip re-simulation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*train) return cmd_train(ta);
    if (*eval) return cmd_eval(ea);
    if (*plot) return cmd_plot(pa);
    if (*replay) return cmd_replay(ra);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
