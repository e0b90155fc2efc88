#include "drsrl/episode.hpp"

namespace drsrl {

Observation observe(const World& world, const RunConfig& config, const ActionTable& actions) {
  Observation obs;
  obs.inputs = encode_agents(world);
  const std::size_t n = world.av_count();
  obs.masks.reserve(n);
  obs.active.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    obs.masks.push_back(mask_actions(world, i, actions, config.mask));
    obs.active.push_back(!world.participant(i).exited);
  }
  const auto reports = assess_risk(world, config.risk);
  obs.risk = scene_risk(world, reports, config.risk);
  obs.high_risk = obs.risk >= config.risk.tau_risk;
  return obs;
}

StepResult advance(World& world, std::span<const ControlInput> controls, const RunConfig& config) {
  const std::size_t n = world.av_count();
  std::vector<bool> was_active(n);
  for (std::size_t i = 0; i < n; ++i) was_active[i] = !world.participant(i).exited;
  world.step(controls);
  StepResult r;
  r.status = check_termination(world, world.horizon());
  r.rewards.assign(n, RewardPair{});
  r.collided.assign(n, false);
  if (r.status.outcome == EpisodeStatus::Outcome::Collision && r.status.collided_pair) {
    const auto [a, b] = *r.status.collided_pair;
    if (a < n) r.collided[a] = true;
    if (b < n) r.collided[b] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (was_active[i]) r.rewards[i] = compute_rewards(world, i, r.collided[i], config.reward);
  }
  return r;
}

std::uint64_t training_episode_seed(std::uint64_t seed, int episode) {
  return derive_seed(seed, 0x1000000ULL + static_cast<std::uint64_t>(episode));
}

std::uint64_t evaluation_episode_seed(std::uint64_t seed, int episode) {
  return derive_seed(seed, 0x2000000ULL + static_cast<std::uint64_t>(episode));
}

World make_world(const RunConfig& config, std::uint64_t scenario_seed) {
  ScenarioSpec spec = config.scenario;
  spec.seed = scenario_seed;
  return instantiate_scenario(spec, config.world);
}

}  // namespace drsrl
