#include "cppo/curriculum.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include <json.hpp>

#include "cppo/csv.hpp"

namespace cppo {

Schedule make_schedule(const CurriculumConfig& c) {
  if (c.nsv_ranges.size() != 3 || c.epsilons.size() != 3 || c.switch_episodes.size() != 2) {
    throw ConfigError("curriculum needs three ranges, three epsilons and two switch points");
  }
  Schedule s;
  s.total_episodes = c.total_episodes;
  if (!c.enabled) {
    s.stages.push_back({3, c.nsv_ranges[2], {{0, c.fixed_epsilon}}, 0});
    return s;
  }
  const std::uint64_t s2 = c.switch_episodes[0];
  const std::uint64_t s3 = c.switch_episodes[1];
  if (s2 > s3 || s3 > c.stage3_eps_switch) throw ConfigError("curriculum switch points must be ordered");
  s.stages.push_back({1, c.nsv_ranges[0], {{0, c.epsilons[0]}}, 0});
  s.stages.push_back({2, c.nsv_ranges[1], {{0, c.epsilons[1]}}, s2});
  CurriculumStage last{3, c.nsv_ranges[2], {}, s3};
  if (c.stage3_eps_switch > s3) last.epsilon_schedule.push_back({0, c.epsilons[1]});
  last.epsilon_schedule.push_back({c.stage3_eps_switch - s3, c.epsilons[2]});
  s.stages.push_back(last);
  return s;
}

StageSelection stage_for_episode(std::uint64_t episode, const Schedule& schedule) {
  if (episode > schedule.total_episodes) {
    throw std::out_of_range("episode " + std::to_string(episode) + " is past the configured total of " +
                            std::to_string(schedule.total_episodes));
  }
  if (schedule.stages.empty()) throw std::logic_error("empty schedule");
  const CurriculumStage* stage = &schedule.stages.front();
  for (const CurriculumStage& s : schedule.stages) {
    if (s.start_episode <= episode) stage = &s;
  }
  double eps = stage->epsilon_schedule.front().second;
  for (const auto& [offset, e] : stage->epsilon_schedule) {
    if (stage->start_episode + offset <= episode) eps = e;
  }
  return {*stage, eps};
}

std::uint64_t next_boundary(std::uint64_t episode, const Schedule& schedule) {
  std::uint64_t next = schedule.total_episodes;
  for (const CurriculumStage& s : schedule.stages) {
    for (const auto& point : s.epsilon_schedule) {
      const std::uint64_t at = s.start_episode + point.first;
      if (at > episode) next = std::min(next, at);
    }
    if (s.start_episode > episode) next = std::min(next, s.start_episode);
  }
  return next;
}

namespace {

std::string stage_file(int stage) { return "stage" + std::to_string(stage) + ".ckpt"; }

// Where a run writes and how many threads it uses do not change its results,
// so they are left out of manifests and checkpoints.
RunConfig recorded(RunConfig c) {
  c.output_dir = "";
  c.jobs = 1;
  return c;
}

}  // namespace

Trainer::Trainer(RunConfig config, std::filesystem::path output_dir) : Trainer(std::move(config), std::move(output_dir), false) {}

Trainer::Trainer(RunConfig config, std::filesystem::path output_dir, bool resuming)
    : config_(std::move(config)),
      dir_(std::move(output_dir)),
      schedule_(make_schedule(config_.curriculum)),
      network_(build_intersection(config_.road)),
      conflicts_(network_, config_.env.traffic.conflict_distance_m) {
  validate(config_);
  Rng init = make_rng(config_.seed, Stream::kInit);
  policy_ = ActorCritic::create(config_.env.observation_size(), config_.nn.actor_hidden, config_.nn.critic_hidden, init);
  optimizers_ = Optimizers::for_policy(policy_);
  state_.stage = stage_for_episode(0, schedule_).stage.index;

  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw std::runtime_error("cannot create output directory " + dir_.string());
  }
  if (!resuming) {
    write_manifest();
    open_logs(false);
  }
}

Trainer Trainer::resume(const std::filesystem::path& checkpoint_path, std::filesystem::path output_dir, int jobs) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  RunConfig config = parse_config(ckpt.meta.config_text);
  if (config_digest(config) != ckpt.meta.config_digest) {
    throw std::runtime_error("checkpoint config does not match its recorded digest");
  }
  config.output_dir = output_dir.string();
  config.jobs = jobs;
  Trainer t(std::move(config), std::move(output_dir), true);
  if (!ckpt.policy.actor.same_shape(t.policy_.actor) || !ckpt.policy.critic.same_shape(t.policy_.critic)) {
    throw std::runtime_error("checkpoint layer sizes do not match its config");
  }
  if (ckpt.meta.episode > t.schedule_.total_episodes) throw std::runtime_error("checkpoint is past the episode budget");
  t.policy_ = std::move(ckpt.policy);
  t.optimizers_ = std::move(ckpt.optimizers);
  t.state_.episode = ckpt.meta.episode;
  t.state_.stage = ckpt.meta.stage;
  t.state_.update_index = ckpt.meta.update_index;
  t.state_.previous_stage_checkpoint = ckpt.meta.previous_stage_checkpoint;
  t.state_.wall_time_s = ckpt.meta.wall_time_s;
  t.stage_started_ = true;
  t.write_manifest();
  truncate_csv(t.dir_ / "training.csv", t.state_.episode);
  truncate_csv(t.dir_ / "updates.csv", t.state_.update_index);
  t.open_logs(true);
  return t;
}

void Trainer::write_manifest() const {
  nlohmann::ordered_json m;
  m["program"] = "cppo";
  m["version"] = CPPO_VERSION;
  m["checkpoint_version"] = kCheckpointVersion;
  m["seed"] = config_.seed;
  m["config_digest"] = config_digest(recorded(config_));
  m["curriculum"] = config_.curriculum.enabled;
  m["training_csv_columns"] = kTrainingCsvHeader;
  m["updates_csv_columns"] = kUpdatesCsvHeader;
  m["config"] = serialize_config(recorded(config_));
  std::ofstream out(dir_ / "run_manifest.json", std::ios::binary | std::ios::trunc);
  out << m.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + (dir_ / "run_manifest.json").string());
}

void Trainer::open_logs(bool append) {
  const auto mode = std::ios::binary | (append ? std::ios::app : std::ios::trunc);
  training_csv_.open(dir_ / "training.csv", mode);
  updates_csv_.open(dir_ / "updates.csv", mode);
  if (!training_csv_ || !updates_csv_) throw std::runtime_error("cannot open CSV logs in " + dir_.string());
  if (!append) {
    training_csv_ << kTrainingCsvHeader << "\n";
    updates_csv_ << kUpdatesCsvHeader << "\n";
  }
}

void Trainer::log_update(const UpdateRecord& r) {
  const double wall = config_.record_wall_time ? state_.wall_time_s : 0.0;
  int successes = 0;
  double total_return = 0.0;
  for (const EpisodeRecord& e : r.episodes) {
    training_csv_ << e.episode << ',' << r.stage << ',' << format_number(r.epsilon) << ',' << e.n_sv << ','
                  << format_number(e.episode_return) << ',' << e.length << ',' << outcome_name(e.outcome) << ','
                  << r.update_index << ',' << format_number(r.metrics.policy_loss) << ','
                  << format_number(r.metrics.value_loss) << ',' << format_number(r.metrics.clip_fraction) << ','
                  << format_number(wall) << '\n';
    successes += e.outcome == Outcome::kSuccess;
    total_return += e.episode_return;
  }
  const double n = static_cast<double>(r.episodes.size());
  const UpdateMetrics& m = r.metrics;
  updates_csv_ << r.update_index << ',' << r.stage << ',' << format_number(r.epsilon) << ',' << r.first_episode << ','
               << r.episodes.size() << ',' << r.steps << ',' << format_number(m.policy_loss) << ','
               << format_number(m.value_loss) << ',' << format_number(m.entropy) << ','
               << format_number(m.mean_ratio) << ',' << format_number(m.clip_fraction) << ','
               << format_number(m.first_minibatch_max_ratio_deviation) << ',' << format_number(successes / n) << ','
               << format_number(total_return / n) << '\n';
  training_csv_.flush();
  updates_csv_.flush();
  if (!training_csv_ || !updates_csv_) throw std::runtime_error("write to CSV logs failed");
}

Checkpoint Trainer::snapshot(double epsilon) const {
  Checkpoint c;
  c.policy = policy_;
  c.optimizers = optimizers_;
  c.meta.stage = state_.stage;
  c.meta.epsilon = epsilon;
  c.meta.episode = state_.episode;
  c.meta.update_index = state_.update_index;
  c.meta.seed = config_.seed;
  c.meta.config_digest = config_digest(recorded(config_));
  c.meta.config_text = serialize_config(recorded(config_));
  c.meta.previous_stage_checkpoint = state_.previous_stage_checkpoint;
  c.meta.wall_time_s = config_.record_wall_time ? state_.wall_time_s : 0.0;
  return c;
}

TrainRunState Trainer::run(std::optional<std::uint64_t> stop_after_episodes) {
  const std::uint64_t total = schedule_.total_episodes;
  auto last_epsilon = [&] {
    return stage_for_episode(state_.episode == 0 ? 0 : state_.episode - 1, schedule_).epsilon;
  };

  while (state_.episode < total) {
    const StageSelection sel = stage_for_episode(state_.episode, schedule_);
    if (sel.stage.index != state_.stage) {
      // Handoff: keep the parameters, start the new stage with fresh Adam moments.
      save_checkpoint(dir_ / stage_file(state_.stage), snapshot(last_epsilon()));
      state_.previous_stage_checkpoint = stage_file(state_.stage);
      optimizers_ = Optimizers::for_policy(policy_);
      state_.stage = sel.stage.index;
      stage_started_ = false;
    }
    if (!stage_started_) {
      if (hooks.on_stage_start) hooks.on_stage_start(sel.stage, policy_);
      stage_started_ = true;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t boundary = next_boundary(state_.episode, schedule_);
    EpisodeCollection request;
    request.first_episode = state_.episode;
    request.max_episodes = static_cast<int>(boundary - state_.episode);
    request.min_steps = config_.ppo.rollout_steps;
    request.seed = config_.seed;
    request.jobs = config_.jobs;
    const NsvRange range = sel.stage.n_sv_range;
    request.range_for_episode = [range](std::uint64_t) { return range; };
    RolloutResult rollout = collect_episodes(network_, conflicts_, config_.env, policy_, request);
    finalize_batch(rollout.batch, config_.ppo.gamma, config_.ppo.gae_lambda);

    Rng shuffle = make_rng(config_.seed, Stream::kShuffle, state_.update_index);
    UpdateRecord record;
    record.update_index = state_.update_index;
    record.stage = state_.stage;
    record.epsilon = sel.epsilon;
    record.first_episode = state_.episode;
    record.steps = rollout.batch.size();
    record.metrics = ppo_update(policy_, optimizers_, rollout.batch, config_.ppo, sel.epsilon, shuffle);
    record.episodes = std::move(rollout.episodes);
    if (!policy_.all_finite()) {
      throw std::runtime_error("non-finite network parameters after update " + std::to_string(state_.update_index) +
                               " (episode " + std::to_string(state_.episode) + ")");
    }

    state_.wall_time_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state_.episode += record.episodes.size();
    ++state_.update_index;
    log_update(record);
    if (hooks.on_update) hooks.on_update(record, policy_);

    if (state_.update_index % static_cast<std::uint64_t>(config_.checkpoint_every) == 0) {
      save_checkpoint(dir_ / "latest.ckpt", snapshot(sel.epsilon));
    }
    if (stop_after_episodes && state_.episode >= *stop_after_episodes && state_.episode < total) {
      save_checkpoint(dir_ / "latest.ckpt", snapshot(sel.epsilon));
      return state_;
    }
  }

  const Checkpoint last = snapshot(last_epsilon());
  save_checkpoint(dir_ / stage_file(state_.stage), last);
  save_checkpoint(dir_ / "latest.ckpt", last);
  save_checkpoint(dir_ / "final.ckpt", last);
  return state_;
}

}  // namespace cppo
