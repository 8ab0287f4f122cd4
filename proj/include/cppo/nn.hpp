#pragma once

#include <array>
#include <functional>
#include <span>

#include <Eigen/Dense>

#include "cppo/dynamics.hpp"
#include "cppo/rng.hpp"

namespace cppo {

/// One-hidden-layer tanh perceptron. Columns of a batch matrix are samples.
struct Mlp {
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // out x hidden
  Eigen::VectorXd b2;

  static Mlp zeros(int in, int hidden, int out);
  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(int in, int hidden, int out, Rng& rng);

  int inputs() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }
  int outputs() const { return static_cast<int>(w2.rows()); }
  std::size_t parameter_count() const;
  bool same_shape(const Mlp& other) const;
  bool all_finite() const;
  void set_zero();

  /// Visits w1, b1, w2, b2 in that order; matrices are visited row-major.
  void for_each_parameter(const std::function<void(double&)>& fn);
  void for_each_parameter(const std::function<void(double)>& fn) const;
};

struct MlpCache {
  Eigen::MatrixXd hidden;  // tanh activations, hidden x batch
  Eigen::MatrixXd output;  // out x batch
};

MlpCache mlp_forward(const Mlp& net, const Eigen::MatrixXd& inputs);

/// Reverse-mode gradients of a scalar loss given dLoss/dOutput for the batch.
/// Throws std::invalid_argument on shape mismatch.
Mlp mlp_backward(const Mlp& net, const Eigen::MatrixXd& inputs, const MlpCache& cache,
                 const Eigen::MatrixXd& output_grad);

struct ActorOutput {
  std::array<double, kNumActions> logits{};
  std::array<double, kNumActions> probs{};
};

/// Numerically stable softmax (max-subtracted) of each column.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);
Eigen::MatrixXd log_softmax_columns(const Eigen::MatrixXd& logits);

/// Throws std::invalid_argument on non-finite or wrongly sized input.
ActorOutput actor_forward(const Mlp& actor, std::span<const double> observation);
double critic_forward(const Mlp& critic, std::span<const double> observation);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Mlp m;
  Mlp v;
  long step = 0;

  static AdamState for_params(const Mlp& params);
};

/// Bias-corrected Adam. Throws std::invalid_argument on non-finite gradients or
/// mismatched shapes.
void adam_step(Mlp& params, const Mlp& grads, AdamState& state, double lr, const AdamConfig& config = {});

/// Separate actor (policy logits) and critic (state value) networks.
struct ActorCritic {
  Mlp actor;
  Mlp critic;

  static ActorCritic create(int inputs, int actor_hidden, int critic_hidden, Rng& rng);
  bool all_finite() const { return actor.all_finite() && critic.all_finite(); }
};

struct Optimizers {
  AdamState actor;
  AdamState critic;

  static Optimizers for_policy(const ActorCritic& policy);
};

}  // namespace cppo
