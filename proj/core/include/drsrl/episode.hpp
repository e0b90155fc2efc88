#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "drsrl/actions.hpp"
#include "drsrl/config.hpp"
#include "drsrl/policy.hpp"
#include "drsrl/rewards.hpp"
#include "drsrl/risk.hpp"
#include "drsrl/world.hpp"

namespace drsrl {

/// What the controllers see before a step.
struct Observation {
  std::vector<AgentInput> inputs;  // one per AV
  std::vector<ActionMask> masks;   // one per AV
  std::vector<bool> active;        // AV has not exited
  double risk = 0.0;               // scene risk
  bool high_risk = false;          // risk >= tau_risk
};

Observation observe(const World& world, const RunConfig& config, const ActionTable& actions);

struct StepResult {
  EpisodeStatus status;
  std::vector<RewardPair> rewards;  // one per AV; zero for AVs that were already out
  std::vector<bool> collided;       // AV took part in the terminal collision
};

/// Applies one control per AV and scores the outcome.
StepResult advance(World& world, std::span<const ControlInput> controls, const RunConfig& config);

/// Scenario seed of training episode `episode` under run seed `seed`.
std::uint64_t training_episode_seed(std::uint64_t seed, int episode);
/// Scenario seed of evaluation episode `episode`; disjoint from training.
std::uint64_t evaluation_episode_seed(std::uint64_t seed, int episode);

World make_world(const RunConfig& config, std::uint64_t scenario_seed);

}  // namespace drsrl
