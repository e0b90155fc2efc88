#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drsrl/nn.hpp"
#include "drsrl/replay.hpp"

namespace drsrl {

enum class DqnVariant : unsigned char { Plain, DoubleDueling };

struct DqnConfig {
  DqnVariant variant = DqnVariant::Plain;
  double gamma = 0.99;
  double huber_delta = 1.0;
  int target_sync = 200;  // optimizer steps between target copies
  double reward_scale = 1.0;
};

/// Q values per column of a forward pass. Plain reads the logits head as Q;
/// the dueling variant combines it with the value head as V + A - mean(A).
Eigen::MatrixXd q_values(const NetOutput& out, DqnVariant variant);

/// TD targets: s r for terminal transitions, otherwise s r + gamma Q_target(s', a'),
/// s the reward scale,
/// with a' the feasible argmax of the target net (plain) or of the online net
/// (double).
std::vector<double> dqn_targets(const Approximator& net, std::span<const double> online, std::span<const double> target,
                                std::span<const Transition* const> batch, const DqnConfig& config);

/// Weighted mean Huber loss of Q(s, a) against fixed targets and its
/// gradient with respect to the online parameters.
double dqn_gradient(const Approximator& net, std::span<const double> online, std::span<const Transition* const> batch,
                    std::span<const double> targets, std::span<const double> weights, const DqnConfig& config,
                    std::vector<double>* grad);

double huber(double x, double delta);

/// Online and target networks with their optimizer.
class DqnLearner {
 public:
  DqnLearner(ApproximatorSpec spec, ParamSet online, double lr, DqnConfig config);

  /// One optimizer step on the batch; syncs the target every target_sync
  /// steps. Returns the loss before the step.
  double update(std::span<const Transition* const> batch, std::span<const double> weights);

  std::vector<double> q(const AgentInput& input) const;
  std::size_t greedy(const AgentInput& input, const ActionMask& mask) const;

  const Approximator& net() const { return net_; }
  const ParamSet& online() const { return online_; }
  ParamSet& online() { return online_; }
  const std::vector<double>& target() const { return target_; }
  const DqnConfig& config() const { return config_; }
  long steps() const { return steps_; }

 private:
  Approximator net_;
  ParamSet online_;
  std::vector<double> target_;
  Adam opt_;
  DqnConfig config_;
  long steps_ = 0;
};

}  // namespace drsrl
