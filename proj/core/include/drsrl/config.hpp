#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "drsrl/actions.hpp"
#include "drsrl/nn.hpp"
#include "drsrl/rewards.hpp"
#include "drsrl/risk.hpp"
#include "drsrl/scenario.hpp"
#include "drsrl/world.hpp"

namespace drsrl {

enum class Algorithm : unsigned char { DrsPpo, Cppo, Cdqn, Cd3qn };

std::string_view to_string(Algorithm algo);
Algorithm algorithm_from_string(std::string_view name);
bool is_ppo(Algorithm algo);

struct TrainConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double lr_task = 3e-4;
  double lr_safe = 1e-4;
  double max_grad_norm = 0.5;
  int batch_size = 256;
  int epochs = 4;
  int replay_episodes = 4;  // rollouts kept for prioritized reuse
  double kappa = 1.0;
  double is_exponent = 0.5;
  double norm_cap = 50.0;
  bool normalize_advantages = true;
  double reward_scale = 0.1;  // applied to rewards before advantage and TD targets

  // Ablation switches; the defaults give the full method.
  double alpha_override = -1.0;  // >= 0 pins alpha_t to this value
  bool uniform_replay = false;
  bool freeze_safety = false;

  // DQN baselines.
  double dqn_lr = 5e-4;
  int dqn_batch = 64;
  int dqn_buffer = 20000;
  int dqn_update_every = 4;
  int dqn_target_sync = 250;
  double dqn_eps_start = 1.0;
  double dqn_eps_end = 0.05;
  double dqn_eps_decay = 0.5;  // fraction of the run over which epsilon anneals

  int checkpoint_every = 0;  // episodes; 0 keeps only the initial and final checkpoints

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Affine normalization bounds for episode returns.
struct ReturnBounds {
  double ref_min = -20.0;
  double ref_max = 20.0;
  bool operator==(const ReturnBounds&) const = default;
};

ReturnBounds default_return_bounds(ScenarioId id);

/// (return - ref_min) / (ref_max - ref_min); throws when the bounds coincide.
double normalized_return(double episode_return, const ReturnBounds& bounds);

struct RunConfig {
  std::string mode = "train";
  Algorithm algorithm = Algorithm::DrsPpo;
  ScenarioSpec scenario = ScenarioSpec::defaults(ScenarioId::LVEB);
  int episodes = 300;
  int eval_episodes = 100;
  std::vector<std::uint64_t> seeds{0};
  WorldConfig world;
  RiskConfig risk;
  RewardConfig reward = RewardConfig::for_scenario(ScenarioId::LVEB);
  MaskConfig mask;
  TrainConfig train;
  ApproximatorSpec task_spec = ApproximatorSpec::task_default();
  ApproximatorSpec safe_spec = ApproximatorSpec::safety_default();
  std::map<std::string, ReturnBounds> return_bounds;  // by scenario name; missing entries use the defaults
  std::string out_dir = "out";

  /// Defaults for a scenario: its spec, reward mode and return bounds.
  static RunConfig for_scenario(ScenarioId id);

  ReturnBounds bounds() const;
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

std::string to_json(const RunConfig& config);
/// Keys missing from the text keep their defaults; unknown keys are errors.
RunConfig run_config_from_json(std::string_view text);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

/// Applies "dotted.key=value" overrides. Values parse as JSON when they can
/// and as bare strings otherwise.
RunConfig apply_overrides(const RunConfig& config, const std::vector<std::string>& assignments);

/// Switches the scenario and the scenario-dependent defaults that were not
/// customized (participant counts, horizon, reward mode).
void set_scenario(RunConfig& config, ScenarioId id);

}  // namespace drsrl
