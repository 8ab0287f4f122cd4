#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cppo/checkpoint.hpp"
#include "cppo/config.hpp"
#include "cppo/ppo.hpp"

namespace cppo {

struct CurriculumStage {
  int index = 1;  // 1..3
  NsvRange n_sv_range;
  // (first episode counted from the stage start, epsilon), ascending
  std::vector<std::pair<std::uint64_t, double>> epsilon_schedule;
  std::uint64_t start_episode = 0;
};

struct Schedule {
  std::vector<CurriculumStage> stages;  // ascending start_episode, first starts at 0
  std::uint64_t total_episodes = 0;
};

struct StageSelection {
  CurriculumStage stage;
  double epsilon = 0.0;
};

/// Three-stage schedule from the config, or with `enabled = false` a single
/// stage-3 environment at `fixed_epsilon`. Throws ConfigError if inconsistent.
Schedule make_schedule(const CurriculumConfig& config);

/// Valid for 0 <= episode <= total (the end index maps to the last stage).
/// Throws std::out_of_range beyond the configured total.
StageSelection stage_for_episode(std::uint64_t episode, const Schedule& schedule);

/// First episode after `episode` at which the stage or epsilon changes, or the total.
std::uint64_t next_boundary(std::uint64_t episode, const Schedule& schedule);

struct TrainRunState {
  std::uint64_t episode = 0;
  int stage = 1;
  std::uint64_t update_index = 0;
  std::string previous_stage_checkpoint;
  double wall_time_s = 0.0;
};

struct UpdateRecord {
  std::uint64_t update_index = 0;
  int stage = 1;
  double epsilon = 0.0;
  std::uint64_t first_episode = 0;
  std::vector<EpisodeRecord> episodes;
  std::size_t steps = 0;
  UpdateMetrics metrics;
};

struct TrainHooks {
  // Called with the parameters a stage starts from (after any handoff).
  std::function<void(const CurriculumStage&, const ActorCritic&)> on_stage_start;
  std::function<void(const UpdateRecord&, const ActorCritic&)> on_update;
};

inline constexpr const char* kTrainingCsvHeader =
    "episode,stage,epsilon,n_sv,return,length,outcome,update_index,policy_loss,value_loss,clip_fraction,wall_time_s";
inline constexpr const char* kUpdatesCsvHeader =
    "update_index,stage,epsilon,first_episode,episodes,steps,policy_loss,value_loss,entropy,mean_ratio,clip_fraction,"
    "first_ratio_deviation,success_rate,mean_return";

/// Runs the curriculum (or the fixed-epsilon baseline) and writes into `output_dir`:
/// training.csv (one row per episode), updates.csv (one row per update),
/// run_manifest.json, stage<i>.ckpt at each stage end, latest.ckpt every
/// `checkpoint_every` updates and when stopping, and final.ckpt. Manifest and
/// checkpoints record the config without run.output_dir and run.jobs.
class Trainer {
 public:
  Trainer(RunConfig config, std::filesystem::path output_dir);

  /// Continues a run from `checkpoint_path`; the run's config comes from the
  /// checkpoint. CSVs in the output directory are cut back to the checkpoint.
  static Trainer resume(const std::filesystem::path& checkpoint_path, std::filesystem::path output_dir, int jobs = 1);

  /// Trains until the total episode budget, or until the first update boundary
  /// at or past `stop_after_episodes`.
  TrainRunState run(std::optional<std::uint64_t> stop_after_episodes = std::nullopt);

  const ActorCritic& policy() const { return policy_; }
  const TrainRunState& state() const { return state_; }
  const RunConfig& config() const { return config_; }
  const Schedule& schedule() const { return schedule_; }

  TrainHooks hooks;

 private:
  Trainer(RunConfig config, std::filesystem::path output_dir, bool resuming);
  Checkpoint snapshot(double epsilon) const;
  void write_manifest() const;
  void open_logs(bool append);
  void log_update(const UpdateRecord& record);

  RunConfig config_;
  std::filesystem::path dir_;
  Schedule schedule_;
  RoadNetwork network_;
  ConflictTable conflicts_;
  ActorCritic policy_;
  Optimizers optimizers_;
  TrainRunState state_;
  bool stage_started_ = false;
  std::ofstream training_csv_;
  std::ofstream updates_csv_;
};

}  // namespace cppo
