#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drsrl/checkpoint.hpp"
#include "drsrl/config.hpp"
#include "drsrl/episode.hpp"
#include "drsrl/replay.hpp"

namespace drsrl {

/// One AV after one step of an evaluation episode.
struct TrajectoryRow {
  std::uint64_t seed = 0;
  int episode = 0;
  int step = 0;  // 1-based index of the step just taken
  double t = 0.0;
  int agent = 0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double accel = 0.0;
  double steer = 0.0;
  double a_lat = 0.0;
  int action = 0;
  double r_task = 0.0;
  double r_safe = 0.0;
  double risk = 0.0;
  double alpha = 0.0;
  // Episode-level values, repeated on every row of the episode.
  int ep_collision = 0;
  double ep_duration = 0.0;
  double ep_normalized_return = 0.0;
  std::string ep_outcome;

  bool operator==(const TrajectoryRow&) const = default;
};

struct MetricsRow {
  double CR = 0.0;   // % of episodes with an AV collision
  double AS = 0.0;   // mean AV speed over logged steps, m/s
  double TT = 0.0;   // mean episode duration, s
  double ALA = 0.0;  // mean |lateral acceleration|, m/s^2
  double ALO = 0.0;  // mean |longitudinal acceleration|, m/s^2
  double reward = 0.0;  // mean normalized return
  int episodes = 0;

  bool operator==(const MetricsRow&) const = default;
};

/// Metrics from trajectory rows alone.
MetricsRow compute_metrics(const std::vector<TrajectoryRow>& rows);

std::string trajectory_header();
std::string format_trajectory_row(const TrajectoryRow& row);
void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path);

std::string metrics_header();
std::string format_metrics(const MetricsRow& m);

/// Chooses an action for AV `av` given the world before the step.
struct DecisionContext {
  const World& world;
  std::size_t av;
  const AgentInput& input;
  const ActionMask& mask;
  double risk;
};
using Controller = std::function<std::size_t(const DecisionContext&)>;

/// Greedy controller for a checkpoint: argmax of the hybrid distribution for
/// DRS-PPO, of the task distribution for CPPO, of Q for the DQN baselines.
Controller greedy_controller(const Checkpoint& ckpt, const RiskConfig& risk);

struct EvalResult {
  MetricsRow metrics;
  std::vector<TrajectoryRow> trajectory;
};

/// Runs `n_episodes` episodes per seed with the controller.
EvalResult evaluate(const Controller& controller, const RunConfig& config, int n_episodes,
                    const std::vector<std::uint64_t>& seeds);

/// Checks the checkpoint against the run's action table and then evaluates
/// its greedy controller.
EvalResult evaluate_checkpoint(const Checkpoint& ckpt, const RunConfig& config, int n_episodes,
                               const std::vector<std::uint64_t>& seeds);

/// Transitions of greedy DRS-PPO rollouts (hybrid argmax), grouped per AV
/// in step order, for the diagnostics report.
std::vector<Transition> collect_transitions(const Checkpoint& ckpt, const RunConfig& config, int n_episodes,
                                            std::uint64_t seed);

/// Train-then-evaluate comparison of several algorithms over a list of seeds.
struct CompareEntry {
  Algorithm algorithm;
  std::uint64_t seed;
  MetricsRow metrics;
};

struct CompareResult {
  std::vector<CompareEntry> entries;
  double median_cr(Algorithm algo) const;
  std::string table() const;
};

CompareResult compare(const RunConfig& base, const std::vector<Algorithm>& algorithms,
                      const std::vector<std::uint64_t>& seeds, int train_episodes, int eval_episodes,
                      const std::string& out_dir = "",
                      const std::function<void(const CompareEntry&)>& on_entry = {});

}  // namespace drsrl
