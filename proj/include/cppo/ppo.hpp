#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cppo/env.hpp"
#include "cppo/nn.hpp"

namespace cppo {

struct PpoConfig {
  double gamma = 0.9;
  double gae_lambda = 0.95;
  int epochs = 20;
  int minibatch_size = 256;
  int rollout_steps = 2048;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double actor_lr = 5e-4;
  double critic_lr = 1e-3;
  double max_grad_norm = 0.0;  // <= 0 disables clipping
  AdamConfig adam;
};

/// On-policy samples for one update. Observations are stored row-major, one row per step.
struct RolloutBatch {
  int observation_size = 0;
  std::vector<double> observations;
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  double last_value = 0.0;  // bootstrap for a trailing unfinished episode
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
  std::span<const double> observation(std::size_t i) const {
    return {observations.data() + i * static_cast<std::size_t>(observation_size),
            static_cast<std::size_t>(observation_size)};
  }
  void append(const RolloutBatch& other);
};

struct EpisodeRecord {
  std::uint64_t episode = 0;
  int n_sv = 0;
  double episode_return = 0.0;
  int length = 0;
  Outcome outcome = Outcome::kRunning;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation; `last_value` bootstraps a non-terminal final step.
/// Throws std::invalid_argument on length mismatch.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double last_value, double gamma, double lambda);

/// In place: mean 0, standard deviation 1 (floor 1e-8).
void standardize(std::vector<double>& values);

/// Computes advantages and returns and standardizes the advantages.
void finalize_batch(RolloutBatch& batch, double gamma, double lambda);

double clipped_surrogate(double ratio, double advantage, double epsilon);
/// d clipped_surrogate / d ratio (zero on the clipped branch).
double clipped_surrogate_slope(double ratio, double advantage, double epsilon);

int sample_action(std::span<const double> probs, Rng& rng);
int greedy_action(std::span<const double> probs);

/// Fixed-length collection: samples `n_steps` transitions, resetting the environment
/// with `range` whenever an episode ends (or has not started).
struct RolloutResult {
  RolloutBatch batch;
  std::vector<EpisodeRecord> episodes;  // episodes completed inside the batch
};
RolloutResult collect_rollout(IntersectionEnv& env, const ActorCritic& policy, int n_steps, NsvRange range,
                              Rng& rng);

/// Plays one full episode whose randomness is derived from (seed, episode) only.
RolloutResult run_episode(IntersectionEnv& env, const ActorCritic& policy, NsvRange range, std::uint64_t seed,
                          std::uint64_t episode);

struct EpisodeCollection {
  std::uint64_t first_episode = 0;
  int max_episodes = 1;  // never run past this many episodes
  int min_steps = 1;     // stop at the first episode boundary with at least this many steps
  std::uint64_t seed = 0;
  int jobs = 1;
  std::function<NsvRange(std::uint64_t)> range_for_episode;
};

/// Collects whole episodes. The result depends only on the request, not on `jobs`.
RolloutResult collect_episodes(const RoadNetwork& network, const ConflictTable& conflicts, const EnvConfig& env_config,
                               const ActorCritic& policy, const EpisodeCollection& request);

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double first_minibatch_max_ratio_deviation = 0.0;
  int minibatches = 0;
};

/// Clipped-surrogate update over `config.epochs` passes of shuffled minibatches.
/// Throws std::runtime_error naming the minibatch if a loss turns non-finite.
UpdateMetrics ppo_update(ActorCritic& policy, Optimizers& optimizers, const RolloutBatch& batch,
                         const PpoConfig& config, double epsilon, Rng& shuffle_rng);

}  // namespace cppo
