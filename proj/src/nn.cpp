#include "cppo/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cppo {

Mlp Mlp::zeros(int in, int hidden, int out) {
  Mlp m;
  m.w1 = Eigen::MatrixXd::Zero(hidden, in);
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.w2 = Eigen::MatrixXd::Zero(out, hidden);
  m.b2 = Eigen::VectorXd::Zero(out);
  return m;
}

Mlp Mlp::glorot(int in, int hidden, int out, Rng& rng) {
  Mlp m = zeros(in, hidden, out);
  auto fill = [&rng](Eigen::MatrixXd& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uniform(rng, -limit, limit);
    }
  };
  fill(m.w1);
  fill(m.w2);
  return m;
}

std::size_t Mlp::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

bool Mlp::same_shape(const Mlp& o) const {
  return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() && b1.size() == o.b1.size() &&
         w2.rows() == o.w2.rows() && w2.cols() == o.w2.cols() && b2.size() == o.b2.size();
}

bool Mlp::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

void Mlp::set_zero() {
  w1.setZero();
  b1.setZero();
  w2.setZero();
  b2.setZero();
}

namespace {

template <typename M, typename Fn>
void visit_rows(M& mat, Fn&& fn) {
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) fn(mat(r, c));
  }
}

}  // namespace

void Mlp::for_each_parameter(const std::function<void(double&)>& fn) {
  visit_rows(w1, fn);
  visit_rows(b1, fn);
  visit_rows(w2, fn);
  visit_rows(b2, fn);
}

void Mlp::for_each_parameter(const std::function<void(double)>& fn) const {
  visit_rows(w1, fn);
  visit_rows(b1, fn);
  visit_rows(w2, fn);
  visit_rows(b2, fn);
}

MlpCache mlp_forward(const Mlp& net, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != net.inputs()) {
    throw std::invalid_argument("network expects " + std::to_string(net.inputs()) + " inputs, got " +
                                std::to_string(inputs.rows()));
  }
  MlpCache cache;
  cache.hidden = ((net.w1 * inputs).colwise() + net.b1).array().tanh().matrix();
  cache.output = (net.w2 * cache.hidden).colwise() + net.b2;
  return cache;
}

Mlp mlp_backward(const Mlp& net, const Eigen::MatrixXd& inputs, const MlpCache& cache,
                 const Eigen::MatrixXd& output_grad) {
  if (output_grad.rows() != net.outputs() || output_grad.cols() != inputs.cols() ||
      cache.hidden.cols() != inputs.cols() || inputs.rows() != net.inputs()) {
    throw std::invalid_argument("backward: gradient/cache shape does not match the network and batch");
  }
  Mlp g;
  g.w2 = output_grad * cache.hidden.transpose();
  g.b2 = output_grad.rowwise().sum();
  const Eigen::MatrixXd pre =
      ((net.w2.transpose() * output_grad).array() * (1.0 - cache.hidden.array().square())).matrix();
  g.w1 = pre * inputs.transpose();
  g.b1 = pre.rowwise().sum();
  return g;
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double top = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - top).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

Eigen::MatrixXd log_softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double top = logits.col(c).maxCoeff();
    const double lse = top + std::log((logits.col(c).array() - top).exp().sum());
    out.col(c) = logits.col(c).array() - lse;
  }
  return out;
}

namespace {

Eigen::MatrixXd column_from(std::span<const double> observation, int expected) {
  if (static_cast<int>(observation.size()) != expected) {
    throw std::invalid_argument("observation has " + std::to_string(observation.size()) + " entries, expected " +
                                std::to_string(expected));
  }
  Eigen::MatrixXd x(expected, 1);
  for (int i = 0; i < expected; ++i) {
    const double value = observation[static_cast<std::size_t>(i)];
    if (!std::isfinite(value)) throw std::invalid_argument("non-finite observation entry " + std::to_string(i));
    x(i, 0) = value;
  }
  return x;
}

}  // namespace

ActorOutput actor_forward(const Mlp& actor, std::span<const double> observation) {
  if (actor.outputs() != kNumActions) throw std::invalid_argument("actor must have one logit per action");
  const MlpCache cache = mlp_forward(actor, column_from(observation, actor.inputs()));
  const Eigen::MatrixXd probs = softmax_columns(cache.output);
  ActorOutput out;
  for (int a = 0; a < kNumActions; ++a) {
    out.logits[static_cast<std::size_t>(a)] = cache.output(a, 0);
    out.probs[static_cast<std::size_t>(a)] = probs(a, 0);
  }
  return out;
}

double critic_forward(const Mlp& critic, std::span<const double> observation) {
  return mlp_forward(critic, column_from(observation, critic.inputs())).output(0, 0);
}

AdamState AdamState::for_params(const Mlp& params) {
  AdamState s;
  s.m = Mlp::zeros(params.inputs(), params.hidden(), params.outputs());
  s.v = Mlp::zeros(params.inputs(), params.hidden(), params.outputs());
  return s;
}

namespace {

template <typename T>
void adam_block(T& param, const T& grad, T& m, T& v, double lr, const AdamConfig& c, double bc1, double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
}

}  // namespace

void adam_step(Mlp& params, const Mlp& grads, AdamState& state, double lr, const AdamConfig& config) {
  if (!params.same_shape(grads) || !params.same_shape(state.m) || !params.same_shape(state.v)) {
    throw std::invalid_argument("adam: parameter, gradient and moment shapes differ");
  }
  if (!grads.all_finite()) throw std::invalid_argument("adam: non-finite gradient");
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  adam_block(params.w1, grads.w1, state.m.w1, state.v.w1, lr, config, bc1, bc2);
  adam_block(params.b1, grads.b1, state.m.b1, state.v.b1, lr, config, bc1, bc2);
  adam_block(params.w2, grads.w2, state.m.w2, state.v.w2, lr, config, bc1, bc2);
  adam_block(params.b2, grads.b2, state.m.b2, state.v.b2, lr, config, bc1, bc2);
}

ActorCritic ActorCritic::create(int inputs, int actor_hidden, int critic_hidden, Rng& rng) {
  ActorCritic ac;
  ac.actor = Mlp::glorot(inputs, actor_hidden, kNumActions, rng);
  ac.critic = Mlp::glorot(inputs, critic_hidden, 1, rng);
  return ac;
}

Optimizers Optimizers::for_policy(const ActorCritic& policy) {
  return {AdamState::for_params(policy.actor), AdamState::for_params(policy.critic)};
}

}  // namespace cppo
