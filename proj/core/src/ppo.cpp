#include "drsrl/ppo.hpp"

#include <algorithm>
#include <cmath>

#include "drsrl/errors.hpp"

namespace drsrl {

namespace {

NetBatch batch_of(std::span<const PpoSample> samples, int extra_rows) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  NetBatch b;
  const Eigen::Index width = samples.front().input->self.size();
  b.self.resize(width, n);
  b.mean.resize(width, n);
  b.extra.resize(extra_rows, extra_rows > 0 ? n : 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    b.self.col(i) = s.input->self;
    b.mean.col(i) = s.input->mean;
    if (extra_rows > 0) {
      if (!s.extra || static_cast<int>(s.extra->size()) != extra_rows) {
        throw DimensionError("ppo: sample is missing the safety-model extra input");
      }
      b.extra.col(i) = Eigen::Map<const Eigen::VectorXd>(s.extra->data(), extra_rows);
    }
  }
  return b;
}

// Shared by ppo_loss and ppo_gradient; fills cotangents when requested.
LossStats evaluate(const Approximator& net, std::span<const double> params, std::span<const PpoSample> samples,
                   const PpoConfig& config, std::vector<double>* grad) {
  LossStats stats;
  if (samples.empty()) {
    if (grad) grad->assign(net.param_count(), 0.0);
    return stats;
  }
  const NetBatch batch = batch_of(samples, net.spec().extra_inputs);
  const NetOutput out = net.forward(params, batch);
  const auto n_actions = static_cast<std::size_t>(net.spec().n_actions);
  const double inv_b = 1.0 / static_cast<double>(samples.size());
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(out.logits.rows(), out.logits.cols());
  Eigen::RowVectorXd dvalue = Eigen::RowVectorXd::Zero(out.value.size());
  double weighted_entropy = 0.0;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto col = static_cast<Eigen::Index>(i);
    if (s.mask->size() != n_actions) throw DimensionError("ppo: mask size differs from the action count");
    const std::span<const double> logits(out.logits.col(col).data(), n_actions);
    const ActionDistribution dist = masked_softmax(logits, *s.mask);
    const double p_a = dist.probs.at(s.action);
    if (!(p_a > 0.0)) throw NumericalError("ppo: stored action is infeasible under the current mask");
    const double logp = std::log(p_a);
    const double ratio = std::exp(logp - s.old_logp);
    const double lo = 1.0 - config.clip_eps;
    const double hi = 1.0 + config.clip_eps;
    const double clipped = std::clamp(ratio, lo, hi);
    const double unclipped_obj = ratio * s.advantage;
    const double clipped_obj = clipped * s.advantage;
    const bool clip_active = clipped_obj < unclipped_obj;
    stats.policy_loss += -s.weight * std::min(unclipped_obj, clipped_obj) * inv_b;
    if (ratio < lo || ratio > hi) stats.clip_fraction += inv_b;

    double entropy = 0.0;
    for (double p : dist.probs) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    stats.entropy += entropy * inv_b;
    weighted_entropy += s.weight * entropy * inv_b;
    const double v = out.value[col];
    const double err = v - s.ret;
    stats.value_loss += s.value_weight * err * err * inv_b;

    if (grad) {
      for (std::size_t k = 0; k < n_actions; ++k) {
        const double p = dist.probs[k];
        if (p == 0.0) continue;
        double d = 0.0;
        if (!clip_active) d += -s.weight * s.advantage * ratio * ((k == s.action ? 1.0 : 0.0) - p);
        d += config.entropy_coef * s.weight * p * (std::log(p) + entropy);
        dlogits(static_cast<Eigen::Index>(k), col) = d * inv_b;
      }
      dvalue[col] = 2.0 * config.value_coef * s.value_weight * err * inv_b;
    }
  }
  // Report the entropy bonus inside the policy term so total() matches the
  // optimized objective.
  stats.policy_loss -= config.entropy_coef * weighted_entropy;
  stats.value_loss *= config.value_coef;
  if (grad) {
    grad->assign(net.param_count(), 0.0);
    net.backward(params, batch, out, dlogits, dvalue, *grad);
  }
  return stats;
}

}  // namespace

double LossStats::total() const { return policy_loss + value_loss; }

LossStats ppo_loss(const Approximator& net, std::span<const double> params, std::span<const PpoSample> samples,
                   const PpoConfig& config) {
  return evaluate(net, params, samples, config, nullptr);
}

LossStats ppo_gradient(const Approximator& net, std::span<const double> params, std::span<const PpoSample> samples,
                       const PpoConfig& config, std::vector<double>& grad) {
  return evaluate(net, params, samples, config, &grad);
}

std::vector<PpoSample> task_samples(std::span<const Transition* const> batch, std::span<const double> is_weights,
                                    bool use_alpha) {
  if (batch.size() != is_weights.size()) throw DimensionError("ppo: batch and weights differ in length");
  std::vector<PpoSample> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    PpoSample s;
    s.input = &t.input;
    s.mask = &t.mask;
    s.action = t.action;
    s.old_logp = t.logp_task;
    s.advantage = t.adv_task;
    s.ret = t.ret_task;
    s.weight = use_alpha ? is_weights[i] * (1.0 - t.alpha) : is_weights[i];
    s.value_weight = is_weights[i];
    out.push_back(s);
  }
  return out;
}

std::vector<PpoSample> safety_samples(std::span<const Transition* const> batch, std::span<const double> is_weights) {
  if (batch.size() != is_weights.size()) throw DimensionError("ppo: batch and weights differ in length");
  std::vector<PpoSample> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    PpoSample s;
    s.input = &t.input;
    s.mask = &t.mask;
    s.extra = &t.task_logits;
    s.action = t.action;
    s.old_logp = t.logp_safe;
    s.advantage = t.adv_safe;
    s.ret = t.ret_safe;
    s.weight = is_weights[i] * t.alpha;
    s.value_weight = is_weights[i];
    out.push_back(s);
  }
  return out;
}

namespace {

LossStats step_model(const Approximator& net, ParamSet& params, Adam& opt, std::span<const PpoSample> samples,
                     const PpoConfig& config) {
  std::vector<double> grad;
  const LossStats stats = ppo_gradient(net, params.values, samples, config, grad);
  if (!std::isfinite(stats.total())) {
    throw NumericalError("ppo: non-finite loss (policy " + std::to_string(stats.policy_loss) + ", value " +
                         std::to_string(stats.value_loss) + ")");
  }
  opt.step(params.values, grad);
  project_in_place(params);
  return stats;
}

}  // namespace

UpdateStats drs_ppo_update(std::span<const Transition* const> batch, std::span<const double> is_weights,
                           PolicyModels& models, Optimizers& opt, const PpoConfig& config, bool freeze_safety) {
  UpdateStats stats;
  const auto task = task_samples(batch, is_weights, true);
  stats.task = step_model(models.task_net, models.task, opt.task, task, config);
  if (!freeze_safety) {
    const auto safe = safety_samples(batch, is_weights);
    stats.safe = step_model(models.safe_net, models.safe, opt.safe, safe, config);
  }
  stats.task_norm = models.task.norm();
  stats.safe_norm = models.safe.norm();
  return stats;
}

UpdateStats cppo_update(std::span<const Transition* const> batch, const Approximator& net, ParamSet& params,
                        Adam& opt, const PpoConfig& config) {
  UpdateStats stats;
  const std::vector<double> ones(batch.size(), 1.0);
  const auto task = task_samples(batch, ones, false);
  stats.task = step_model(net, params, opt, task, config);
  stats.task_norm = params.norm();
  return stats;
}

}  // namespace drsrl
