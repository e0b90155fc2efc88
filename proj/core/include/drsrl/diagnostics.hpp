#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "drsrl/policy.hpp"
#include "drsrl/random.hpp"
#include "drsrl/replay.hpp"

namespace drsrl {

struct DiagnosticsConfig {
  double perturbation = 1e-2;  // radius of the random state perturbations
  int pairs_per_state = 4;
  double fd_step = 1e-5;
  double lambda_kl = 0.1;
  double gamma = 0.99;
  double eps = 1e-12;  // floor on the Jacobian norm in the correction ratio
};

struct DiagnosticsReport {
  std::size_t states = 0;
  double lipschitz_estimate = 0.0;
  double correction_ratio = 0.0;
  double max_kl_alpha_zero = 0.0;  // KL(hybrid || task) with alpha forced to 0
  std::vector<double> lyapunov;    // V(s_t) per transition, in input order
  double decrease_fraction = 0.0;
  std::size_t decrease_pairs = 0;

  std::string to_text() const;
};

/// A policy seen as a map from the flattened state [self; mean] to action
/// probabilities.
using PolicyMap = std::function<std::vector<double>(const Eigen::VectorXd&)>;

Eigen::VectorXd flatten_input(const AgentInput& input);
AgentInput unflatten_input(const Eigen::VectorXd& s);

/// Largest ||pi(s) - pi(s')|| / ||s - s'|| over random perturbations of each
/// state.
double lipschitz_estimate(const PolicyMap& policy, std::span<const Eigen::VectorXd> states, const DiagnosticsConfig& config,
                          Rng& rng);

/// Frobenius norm of the state Jacobian of `policy` by central differences.
double jacobian_norm(const PolicyMap& policy, const Eigen::VectorXd& s, double step);

/// Largest ||pi_safe(s) - pi_task(s)|| / max(eps, ||d pi_task / ds||).
double correction_ratio(const PolicyMap& task, const PolicyMap& safe, std::span<const Eigen::VectorXd> states,
                        const DiagnosticsConfig& config);

/// Fraction of consecutive pairs with V nonincreasing. `chain` groups the
/// series into independent trajectories; pairs never cross a group change.
double decrease_fraction(std::span<const double> v, std::span<const std::size_t> chain, std::size_t* pairs = nullptr);

/// Monitoring report for trained task and safety models over a set of
/// stored transitions. Transitions of one AV in one episode must appear in
/// step order for the V series to be meaningful.
DiagnosticsReport theorem_diagnostics(const PolicyModels& models, std::span<const Transition> transitions,
                                      const DiagnosticsConfig& config, Rng& rng);

}  // namespace drsrl
