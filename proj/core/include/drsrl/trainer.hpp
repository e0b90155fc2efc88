#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drsrl/checkpoint.hpp"
#include "drsrl/config.hpp"
#include "drsrl/dqn.hpp"
#include "drsrl/episode.hpp"
#include "drsrl/ppo.hpp"
#include "drsrl/replay.hpp"

namespace drsrl {

struct EpisodeLogRow {
  int episode = 0;
  std::uint64_t seed = 0;
  double return_task = 0.0;  // summed over steps, averaged over AVs
  double return_safe = 0.0;
  double normalized_return = 0.0;
  int collisions = 0;  // 1 when an AV collided
  double mean_risk = 0.0;
  double alpha_high_fraction = 0.0;
  int steps = 0;
  std::string outcome;

  bool operator==(const EpisodeLogRow&) const = default;
};

std::string episode_log_header();
std::string format_episode_row(const EpisodeLogRow& row);
void write_episode_log(const std::string& path, const std::vector<EpisodeLogRow>& rows);

struct TrainStats {
  std::size_t updates = 0;
  double max_task_norm = 0.0;
  double max_safe_norm = 0.0;
  std::size_t transitions = 0;
};

/// One training run of a single algorithm under a single seed.
class Trainer {
 public:
  Trainer(RunConfig config, std::uint64_t seed);
  ~Trainer();

  /// Rolls out one episode with the current policy, then runs its update
  /// phase. Episodes are numbered from 0 in call order.
  EpisodeLogRow run_episode();

  /// Runs `episodes` episodes. With a nonempty `out_dir`, writes the episode
  /// log and checkpoints there.
  std::vector<EpisodeLogRow> train(int episodes, const std::string& out_dir = "");

  Checkpoint checkpoint() const;
  const RunConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  int episodes_done() const { return episode_; }
  const TrainStats& stats() const { return stats_; }

  /// PPO algorithms only.
  const PolicyModels& models() const;
  /// Transitions of the most recent episodes (PPO algorithms), in buffer order.
  std::vector<Transition> recent_transitions() const;

  /// Called after every optimizer step with the trainer in its post-step state.
  std::function<void(const Trainer&)> on_update;

  std::string log_path(const std::string& out_dir) const;
  std::string checkpoint_path(const std::string& out_dir, const std::string& tag) const;

 private:
  struct Rollout;
  Rollout rollout();
  void ppo_update(std::size_t new_transitions);
  void refresh_advantages();
  void dqn_learn(std::uint64_t& env_steps);
  void check_norms();
  double exploration_epsilon() const;

  RunConfig config_;
  std::uint64_t seed_;
  ActionTable actions_;
  Rng rng_;
  int episode_ = 0;
  int planned_episodes_ = 0;
  TrainStats stats_;

  // PPO family
  std::unique_ptr<PolicyModels> models_;
  std::unique_ptr<Optimizers> opt_;
  std::unique_ptr<ReplayBuffer> buffer_;
  std::deque<std::size_t> episode_sizes_;

  // DQN family
  std::unique_ptr<DqnLearner> dqn_;
  std::unique_ptr<ReplayBuffer> dqn_buffer_;
  std::uint64_t env_steps_ = 0;
};

}  // namespace drsrl
