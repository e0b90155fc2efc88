#include "drsrl/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drsrl/errors.hpp"

namespace drsrl {

namespace {

NetBatch states_of(std::span<const Transition* const> batch, bool next) {
  std::vector<AgentInput> inputs;
  inputs.reserve(batch.size());
  for (const Transition* t : batch) inputs.push_back(next ? t->next_input : t->input);
  return make_batch(inputs);
}

std::size_t feasible_argmax(const Eigen::MatrixXd& q, Eigen::Index col, const ActionMask& mask) {
  std::size_t best = 0;
  double best_q = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (!mask[k]) continue;
    const double v = q(static_cast<Eigen::Index>(k), col);
    if (v > best_q) {
      best_q = v;
      best = k;
    }
  }
  if (best_q == -std::numeric_limits<double>::infinity()) throw InvalidStateError("dqn: no feasible action");
  return best;
}

}  // namespace

double huber(double x, double delta) {
  const double a = std::abs(x);
  return a <= delta ? 0.5 * x * x : delta * (a - 0.5 * delta);
}

Eigen::MatrixXd q_values(const NetOutput& out, DqnVariant variant) {
  if (variant == DqnVariant::Plain) return out.logits;
  Eigen::MatrixXd q = out.logits;
  const Eigen::RowVectorXd mean = out.logits.colwise().mean();
  q.rowwise() -= mean;
  q.rowwise() += out.value;
  return q;
}

std::vector<double> dqn_targets(const Approximator& net, std::span<const double> online, std::span<const double> target,
                                std::span<const Transition* const> batch, const DqnConfig& config) {
  std::vector<double> y(batch.size());
  if (batch.empty()) return y;
  const NetBatch next = states_of(batch, true);
  const Eigen::MatrixXd q_target = q_values(net.forward(target, next), config.variant);
  Eigen::MatrixXd q_select;
  if (config.variant == DqnVariant::DoubleDueling) q_select = q_values(net.forward(online, next), config.variant);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    if (t.done) {
      y[i] = config.reward_scale * t.r_task;
      continue;
    }
    const auto col = static_cast<Eigen::Index>(i);
    const std::size_t a = feasible_argmax(config.variant == DqnVariant::DoubleDueling ? q_select : q_target, col,
                                          t.next_mask);
    y[i] = config.reward_scale * t.r_task + config.gamma * q_target(static_cast<Eigen::Index>(a), col);
  }
  return y;
}

double dqn_gradient(const Approximator& net, std::span<const double> online, std::span<const Transition* const> batch,
                    std::span<const double> targets, std::span<const double> weights, const DqnConfig& config,
                    std::vector<double>* grad) {
  if (targets.size() != batch.size() || weights.size() != batch.size()) {
    throw DimensionError("dqn: batch, targets and weights differ in length");
  }
  if (grad) grad->assign(net.param_count(), 0.0);
  if (batch.empty()) return 0.0;
  const NetBatch states = states_of(batch, false);
  const NetOutput out = net.forward(online, states);
  const Eigen::MatrixXd q = q_values(out, config.variant);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const auto n = out.logits.rows();
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(n, out.logits.cols());
  Eigen::RowVectorXd dvalue = Eigen::RowVectorXd::Zero(out.value.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const auto a = static_cast<Eigen::Index>(batch[i]->action);
    const double err = q(a, col) - targets[i];
    loss += weights[i] * huber(err, config.huber_delta) * inv_b;
    const double dq = weights[i] * std::clamp(err, -config.huber_delta, config.huber_delta) * inv_b;
    if (config.variant == DqnVariant::Plain) {
      dlogits(a, col) = dq;
    } else {
      dlogits.col(col).setConstant(-dq / static_cast<double>(n));
      dlogits(a, col) += dq;
      dvalue[col] = dq;
    }
  }
  if (grad) net.backward(online, states, out, dlogits, dvalue, *grad);
  return loss;
}

DqnLearner::DqnLearner(ApproximatorSpec spec, ParamSet online, double lr, DqnConfig config)
    : net_(std::move(spec)), online_(std::move(online)), target_(online_.values),
      opt_(online_.values.size(), lr), config_(config) {
  if (online_.values.size() != net_.param_count()) throw DimensionError("dqn: parameter count does not match spec");
  if (config_.target_sync <= 0) throw ConfigError("dqn: target_sync must be positive");
  if (!(config_.gamma >= 0.0 && config_.gamma < 1.0)) throw ConfigError("dqn: gamma must lie in [0, 1)");
}

double DqnLearner::update(std::span<const Transition* const> batch, std::span<const double> weights) {
  const auto y = dqn_targets(net_, online_.values, target_, batch, config_);
  std::vector<double> grad;
  const double loss = dqn_gradient(net_, online_.values, batch, y, weights, config_, &grad);
  if (!std::isfinite(loss)) throw NumericalError("dqn: non-finite loss");
  opt_.step(online_.values, grad);
  project_in_place(online_);
  if (++steps_ % config_.target_sync == 0) target_ = online_.values;
  return loss;
}

std::vector<double> DqnLearner::q(const AgentInput& input) const {
  const NetOutput out = net_.forward(online_.values, make_batch(std::span(&input, 1)));
  const Eigen::MatrixXd qv = q_values(out, config_.variant);
  return {qv.data(), qv.data() + qv.size()};
}

std::size_t DqnLearner::greedy(const AgentInput& input, const ActionMask& mask) const {
  const NetOutput out = net_.forward(online_.values, make_batch(std::span(&input, 1)));
  return feasible_argmax(q_values(out, config_.variant), 0, mask);
}

}  // namespace drsrl
