#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drsrl/nn.hpp"
#include "drsrl/policy.hpp"
#include "drsrl/replay.hpp"

namespace drsrl {

struct PpoConfig {
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

/// One term of a clipped-surrogate objective. `weight` scales the policy and
/// entropy terms, `value_weight` the critic regression.
struct PpoSample {
  const AgentInput* input = nullptr;
  const ActionMask* mask = nullptr;
  const std::vector<double>* extra = nullptr;  // task logits for the safety model
  std::size_t action = 0;
  double old_logp = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
  double weight = 1.0;
  double value_weight = 1.0;
};

struct LossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double total() const;
};

/// Mean loss over the samples:
///   -w min(r A, clip(r, 1 +- eps) A) + c_v vw (V - R)^2 - c_e w H
LossStats ppo_loss(const Approximator& net, std::span<const double> params, std::span<const PpoSample> samples,
                   const PpoConfig& config);

/// Loss and its exact gradient; `grad` is overwritten.
LossStats ppo_gradient(const Approximator& net, std::span<const double> params, std::span<const PpoSample> samples,
                       const PpoConfig& config, std::vector<double>& grad);

struct Optimizers {
  Adam task;
  Adam safe;
};

struct UpdateStats {
  LossStats task;
  LossStats safe;
  double task_norm = 0.0;
  double safe_norm = 0.0;
};

/// DRS-PPO step on one minibatch: task loss weighted by w_b (1 - alpha_t),
/// safety loss by w_b alpha_t, one optimizer step per model, then projection
/// onto the norm balls. With `freeze_safety` the safety model is untouched.
UpdateStats drs_ppo_update(std::span<const Transition* const> batch, std::span<const double> is_weights,
                           PolicyModels& models, Optimizers& opt, const PpoConfig& config,
                           bool freeze_safety = false);

/// Plain centralized PPO on the task reward: unit weights, no safety model.
UpdateStats cppo_update(std::span<const Transition* const> batch, const Approximator& net, ParamSet& params,
                        Adam& opt, const PpoConfig& config);

/// Samples for the task model: weights w_b (1 - alpha).
std::vector<PpoSample> task_samples(std::span<const Transition* const> batch, std::span<const double> is_weights,
                                    bool use_alpha);
/// Samples for the safety model: weights w_b alpha.
std::vector<PpoSample> safety_samples(std::span<const Transition* const> batch, std::span<const double> is_weights);

}  // namespace drsrl
