#include "cppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

namespace cppo {

void RolloutBatch::append(const RolloutBatch& o) {
  if (observation_size == 0) observation_size = o.observation_size;
  if (o.size() > 0 && o.observation_size != observation_size) {
    throw std::invalid_argument("cannot append batches with different observation sizes");
  }
  observations.insert(observations.end(), o.observations.begin(), o.observations.end());
  actions.insert(actions.end(), o.actions.begin(), o.actions.end());
  log_probs.insert(log_probs.end(), o.log_probs.begin(), o.log_probs.end());
  rewards.insert(rewards.end(), o.rewards.begin(), o.rewards.end());
  values.insert(values.end(), o.values.begin(), o.values.end());
  dones.insert(dones.end(), o.dones.begin(), o.dones.end());
  last_value = o.last_value;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double last_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("gae: rewards, values and dones must have equal length");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = last_value;
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double live = dones[i] ? 0.0 : 1.0;
    const double td = rewards[i] + gamma * next_value * live - values[i];
    next_adv = td + gamma * lambda * live * next_adv;
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + values[i];
    next_value = values[i];
  }
  return out;
}

void standardize(std::vector<double>& values) {
  if (values.empty()) return;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::max(std::sqrt(var / n), 1e-8);
  for (double& v : values) v = (v - mean) / sd;
}

void finalize_batch(RolloutBatch& batch, double gamma, double lambda) {
  GaeResult gae = compute_gae(batch.rewards, batch.values, batch.dones, batch.last_value, gamma, lambda);
  batch.advantages = std::move(gae.advantages);
  batch.returns = std::move(gae.returns);
  standardize(batch.advantages);
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double clipped_surrogate_slope(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  if (clipped != ratio && clipped * advantage < ratio * advantage) return 0.0;
  return advantage;
}

int sample_action(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

int greedy_action(std::span<const double> probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

namespace {

// Records the transition taken from `obs`; returns the step result.
StepResult record_step(IntersectionEnv& env, const ActorCritic& policy, const StateMatrix& obs, Rng& rng,
                       RolloutBatch& batch) {
  const auto flat = obs.flat();
  const ActorOutput out = actor_forward(policy.actor, flat);
  const int action = sample_action(out.probs, rng);
  batch.observations.insert(batch.observations.end(), flat.begin(), flat.end());
  batch.actions.push_back(action);
  batch.log_probs.push_back(std::log(out.probs[static_cast<std::size_t>(action)]));
  batch.values.push_back(critic_forward(policy.critic, flat));
  StepResult step = env.step(static_cast<Action>(action));
  batch.rewards.push_back(step.reward.total);
  batch.dones.push_back(step.outcome != Outcome::kRunning ? 1 : 0);
  return step;
}

}  // namespace

RolloutResult collect_rollout(IntersectionEnv& env, const ActorCritic& policy, int n_steps, NsvRange range, Rng& rng) {
  if (n_steps <= 0) throw std::invalid_argument("rollout length must be positive");
  RolloutResult result;
  result.batch.observation_size = env.config().observation_size();
  StateMatrix obs = env.context().outcome == Outcome::kRunning ? env.observe() : env.reset(range, rng);
  EpisodeRecord current{0, env.spawned_count(), 0.0, 0, Outcome::kRunning};
  for (int i = 0; i < n_steps; ++i) {
    const StepResult step = record_step(env, policy, obs, rng, result.batch);
    current.episode_return += step.reward.total;
    ++current.length;
    if (step.outcome != Outcome::kRunning) {
      current.outcome = step.outcome;
      current.episode = result.episodes.size();
      result.episodes.push_back(current);
      obs = env.reset(range, rng);
      current = EpisodeRecord{0, env.spawned_count(), 0.0, 0, Outcome::kRunning};
    } else {
      obs = step.observation;
    }
  }
  result.batch.last_value = result.batch.dones.back() ? 0.0 : critic_forward(policy.critic, obs.flat());
  return result;
}

RolloutResult run_episode(IntersectionEnv& env, const ActorCritic& policy, NsvRange range, std::uint64_t seed,
                          std::uint64_t episode) {
  Rng env_rng = make_rng(seed, Stream::kEpisode, episode);
  Rng policy_rng = make_rng(seed, Stream::kPolicy, episode);
  RolloutResult result;
  result.batch.observation_size = env.config().observation_size();
  StateMatrix obs = env.reset(range, env_rng);
  EpisodeRecord record{episode, env.spawned_count(), 0.0, 0, Outcome::kRunning};
  while (true) {
    const StepResult step = record_step(env, policy, obs, policy_rng, result.batch);
    record.episode_return += step.reward.total;
    ++record.length;
    if (step.outcome != Outcome::kRunning) {
      record.outcome = step.outcome;
      break;
    }
    obs = step.observation;
  }
  result.episodes.push_back(record);
  return result;
}

RolloutResult collect_episodes(const RoadNetwork& network, const ConflictTable& conflicts, const EnvConfig& env_config,
                               const ActorCritic& policy, const EpisodeCollection& request) {
  if (request.max_episodes <= 0 || request.min_steps <= 0) {
    throw std::invalid_argument("episode collection needs positive episode and step budgets");
  }
  const int jobs = std::max(1, request.jobs);
  RolloutResult result;
  result.batch.observation_size = env_config.observation_size();
  std::size_t steps = 0;
  int done = 0;
  while (done < request.max_episodes && steps < static_cast<std::size_t>(request.min_steps)) {
    // A wave of episodes; results are consumed strictly in episode order, so the
    // episodes kept never depend on the wave width.
    const int wave = std::min(jobs, request.max_episodes - done);
    std::vector<RolloutResult> parts(static_cast<std::size_t>(wave));
    auto play = [&](int k) {
      IntersectionEnv env(network, conflicts, env_config);
      const std::uint64_t episode = request.first_episode + static_cast<std::uint64_t>(done + k);
      parts[static_cast<std::size_t>(k)] =
          run_episode(env, policy, request.range_for_episode(episode), request.seed, episode);
    };
    if (wave == 1) {
      play(0);
    } else {
      std::vector<std::thread> threads;
      for (int k = 0; k < wave; ++k) threads.emplace_back(play, k);
      for (auto& t : threads) t.join();
    }
    for (const RolloutResult& part : parts) {
      if (steps >= static_cast<std::size_t>(request.min_steps)) break;
      result.batch.append(part.batch);
      result.episodes.push_back(part.episodes.front());
      steps += part.batch.size();
      ++done;
    }
  }
  result.batch.last_value = 0.0;
  return result;
}

namespace {

double global_norm(const Mlp& a, const Mlp& b) {
  return std::sqrt(a.w1.squaredNorm() + a.b1.squaredNorm() + a.w2.squaredNorm() + a.b2.squaredNorm() +
                   b.w1.squaredNorm() + b.b1.squaredNorm() + b.w2.squaredNorm() + b.b2.squaredNorm());
}

void scale(Mlp& g, double k) {
  g.w1 *= k;
  g.b1 *= k;
  g.w2 *= k;
  g.b2 *= k;
}

}  // namespace

UpdateMetrics ppo_update(ActorCritic& policy, Optimizers& optimizers, const RolloutBatch& batch,
                         const PpoConfig& config, double epsilon, Rng& shuffle_rng) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo_update: empty batch");
  if (batch.advantages.size() != n || batch.returns.size() != n) {
    throw std::invalid_argument("ppo_update: batch advantages/returns not computed");
  }
  if (config.epochs <= 0 || config.minibatch_size <= 0) throw std::invalid_argument("ppo_update: bad schedule");

  const int dim = batch.observation_size;
  std::vector<std::size_t> order(n);
  UpdateMetrics metrics;
  double ratio_sum = 0.0, clipped = 0.0, samples = 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i + 1 < n; ++i) {
      std::swap(order[i], order[static_cast<std::size_t>(uniform_int(shuffle_rng, static_cast<int>(i),
                                                                       static_cast<int>(n - 1)))]);
    }
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.minibatch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.minibatch_size));
      const auto count = static_cast<Eigen::Index>(end - start);
      const double inv = 1.0 / static_cast<double>(count);

      Eigen::MatrixXd x(dim, count);
      for (Eigen::Index j = 0; j < count; ++j) {
        const auto obs = batch.observation(order[start + static_cast<std::size_t>(j)]);
        for (int r = 0; r < dim; ++r) x(r, j) = obs[static_cast<std::size_t>(r)];
      }

      const MlpCache actor_cache = mlp_forward(policy.actor, x);
      const Eigen::MatrixXd logp = log_softmax_columns(actor_cache.output);
      const Eigen::MatrixXd probs = logp.array().exp().matrix();
      const MlpCache critic_cache = mlp_forward(policy.critic, x);

      Eigen::MatrixXd d_logits = Eigen::MatrixXd::Zero(kNumActions, count);
      Eigen::MatrixXd d_value(1, count);
      double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0, max_dev = 0.0;
      for (Eigen::Index j = 0; j < count; ++j) {
        const std::size_t idx = order[start + static_cast<std::size_t>(j)];
        const int a = batch.actions[idx];
        const double adv = batch.advantages[idx];
        const double ratio = std::exp(logp(a, j) - batch.log_probs[idx]);
        max_dev = std::max(max_dev, std::abs(ratio - 1.0));
        ratio_sum += ratio;
        clipped += std::abs(ratio - 1.0) > epsilon ? 1.0 : 0.0;
        samples += 1.0;
        policy_loss -= clipped_surrogate(ratio, adv, epsilon) * inv;

        double h = 0.0;
        for (int k = 0; k < kNumActions; ++k) h -= probs(k, j) * logp(k, j);
        entropy += h * inv;

        // d(-surrogate)/d logits through ratio = exp(logp_a - old); entropy bonus gradient.
        const double slope = clipped_surrogate_slope(ratio, adv, epsilon);
        for (int k = 0; k < kNumActions; ++k) {
          const double onehot = k == a ? 1.0 : 0.0;
          d_logits(k, j) = -slope * ratio * (onehot - probs(k, j)) * inv +
                           config.entropy_coef * probs(k, j) * (logp(k, j) + h) * inv;
        }

        const double err = critic_cache.output(0, j) - batch.returns[idx];
        value_loss += err * err * inv;
        d_value(0, j) = 2.0 * config.value_coef * err * inv;
      }
      if (epoch == 0 && start == 0) metrics.first_minibatch_max_ratio_deviation = max_dev;

      const double loss = policy_loss + config.value_coef * value_loss - config.entropy_coef * entropy;
      if (!std::isfinite(loss)) {
        throw std::runtime_error("non-finite PPO loss in epoch " + std::to_string(epoch) + ", minibatch " +
                                 std::to_string(start / static_cast<std::size_t>(config.minibatch_size)));
      }

      Mlp actor_grad = mlp_backward(policy.actor, x, actor_cache, d_logits);
      Mlp critic_grad = mlp_backward(policy.critic, x, critic_cache, d_value);
      if (config.max_grad_norm > 0.0) {
        const double total = global_norm(actor_grad, critic_grad);
        if (total > config.max_grad_norm) {
          scale(actor_grad, config.max_grad_norm / total);
          scale(critic_grad, config.max_grad_norm / total);
        }
      }
      adam_step(policy.actor, actor_grad, optimizers.actor, config.actor_lr, config.adam);
      adam_step(policy.critic, critic_grad, optimizers.critic, config.critic_lr, config.adam);

      metrics.policy_loss += policy_loss;
      metrics.value_loss += value_loss;
      metrics.entropy += entropy;
      ++metrics.minibatches;
    }
  }
  if (!policy.all_finite()) throw std::runtime_error("PPO update produced non-finite parameters");
  const double mb = static_cast<double>(metrics.minibatches);
  metrics.policy_loss /= mb;
  metrics.value_loss /= mb;
  metrics.entropy /= mb;
  metrics.mean_ratio = ratio_sum / samples;
  metrics.clip_fraction = clipped / samples;
  return metrics;
}

}  // namespace cppo
