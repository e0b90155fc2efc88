#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drsrl/actions.hpp"
#include "drsrl/nn.hpp"
#include "drsrl/random.hpp"
#include "drsrl/world.hpp"

namespace drsrl {

/// Probability vector over the discrete actions.
struct ActionDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  /// Throws unless entries are nonnegative and sum to 1 within `tol`.
  void validate(double tol = 1e-9) const;
  std::size_t argmax() const;
};

/// Softmax over the entries allowed by `mask`; masked entries get exactly 0.
ActionDistribution masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask);

/// Residual fusion task + alpha (safe - task), applied to probabilities.
ActionDistribution hybrid(const ActionDistribution& task, const ActionDistribution& safe, double alpha);

struct SampledAction {
  std::size_t index = 0;
  double log_prob = 0.0;
};

SampledAction sample_action(const ActionDistribution& dist, Rng& rng);

/// KL(p || q) over the support of p.
double kl_divergence(const ActionDistribution& p, const ActionDistribution& q);

/// Ego-centric network input for one AV: its own normalized feature row and
/// the mean of the normalized rows in its graph neighbourhood.
struct AgentInput {
  Eigen::VectorXd self;
  Eigen::VectorXd mean;
};

/// Scales a raw 22-wide node row relative to the ego row.
Eigen::VectorXd normalize_node(std::span<const double> row, std::span<const double> ego_row, const WorldConfig& config);

AgentInput encode_agent(const RoadGraph& graph, std::size_t ego, const WorldConfig& config);

/// Graph over the current world and the encoded input of every AV.
std::vector<AgentInput> encode_agents(const World& world);

NetBatch make_batch(std::span<const AgentInput> inputs, std::span<const std::vector<double>> extra = {});

/// Task and safety approximators with their parameters.
struct PolicyModels {
  Approximator task_net{ApproximatorSpec::task_default()};
  Approximator safe_net{ApproximatorSpec::safety_default()};
  ParamSet task;
  ParamSet safe;

  /// Default architecture, random init, caps C and 0.27 C. Throws when the
  /// safety model exceeds 27% of the task model's parameter count.
  static PolicyModels create(Rng& rng, double norm_cap, ApproximatorSpec task_spec = ApproximatorSpec::task_default(),
                             ApproximatorSpec safe_spec = ApproximatorSpec::safety_default());
};

inline constexpr double kSafetyBudget = 0.27;

struct PolicyEval {
  std::vector<double> task_logits;
  double task_value = 0.0;
  ActionDistribution task;
  std::vector<double> safe_logits;
  double safe_value = 0.0;
  ActionDistribution safe;
};

ActionDistribution task_policy(const Approximator& net, const ParamSet& params, const AgentInput& input,
                               const ActionMask& mask, std::vector<double>* logits = nullptr, double* value = nullptr);

ActionDistribution safe_policy(const Approximator& net, const ParamSet& params, const AgentInput& input,
                               std::span<const double> task_logits, const ActionMask& mask,
                               std::vector<double>* logits = nullptr, double* value = nullptr);

/// Both models for one AV (safety model consuming the task logits).
PolicyEval evaluate_policies(const PolicyModels& models, const AgentInput& input, const ActionMask& mask,
                             bool with_safety = true);

}  // namespace drsrl
