#include <gtest/gtest.h>

#include <cmath>

#include "drsrl/errors.hpp"
#include "drsrl/random.hpp"
#include "drsrl/rewards.hpp"
#include "drsrl/risk.hpp"
#include "drsrl/scenario.hpp"
#include "support.hpp"

namespace drsrl {
namespace {

using test::av;
using test::bv;
using test::ped;
using test::world_of;

TEST(Components, Spacing) {
  EXPECT_DOUBLE_EQ(spacing_reward(5.0, 10.0), -0.5);
  EXPECT_EQ(spacing_reward(10.0, 10.0), 0.0);
  EXPECT_EQ(spacing_reward(40.0, 10.0), 0.0);
  EXPECT_EQ(spacing_reward(0.0, 10.0), -1.0);
}

TEST(Components, Speed) {
  EXPECT_EQ(speed_reward(14.0, 14.0), 1.0);
  EXPECT_DOUBLE_EQ(speed_reward(7.0, 14.0), 0.5);
  EXPECT_DOUBLE_EQ(speed_reward(21.0, 14.0), 0.5);
  EXPECT_EQ(speed_reward(0.0, 14.0), 0.0);
  EXPECT_EQ(speed_reward(50.0, 14.0), -1.0);
}

TEST(Components, Comfort) {
  const RewardConfig rc;
  EXPECT_EQ(comfort_reward(0, 0, rc), 0.0);
  EXPECT_DOUBLE_EQ(comfort_reward(2.0, -4.0, rc), -(0.5 + 1.0) * 0.25);
}

TEST(Components, AvoidTermByHand) {
  const RewardConfig rc;
  EXPECT_NEAR(avoid_term(rc.lambda_decay, 15, 10, rc.delta0_deg, rc), std::exp(-1.0) * 5.0, 1e-12);
  EXPECT_NEAR(avoid_term(rc.lambda_decay, 15, 10, rc.delta0_deg, rc), 1.839, 1e-3);
  EXPECT_EQ(avoid_term(5, 15, 10, 0, rc), 0.0);
  EXPECT_DOUBLE_EQ(avoid_term(0, 15, 10, -30, rc), 5.0);  // |delta| saturates at delta0
}

TEST(Components, AvoidTermFadesWithDistance) {
  const RewardConfig rc;
  EXPECT_NEAR(avoid_term(100, 14, 0, 30, rc), std::exp(-10.0) * 14.0, 1e-15);
  EXPECT_LT(avoid_term(100, 14, 0, 30, rc), 1e-3);
}

TEST(Components, BrakeTerm) {
  const RewardConfig rc;
  EXPECT_EQ(brake_term(5, kInfinity, -4, rc), 0.0);
  EXPECT_NEAR(brake_term(10, 1.9, -2, rc), std::exp(-1.0) / 2.0 * 0.5, 1e-12);
  EXPECT_EQ(brake_term(10, 1.0, 2, rc), 0.0);  // accelerating earns nothing
  EXPECT_LE(brake_term(0, 0, -4, rc), 1.0 / rc.eps + 1e-12);
}

TEST(Components, BrakeMonotone) {
  const RewardConfig rc;
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double d = rng.uniform(0, 50);
    const double t = rng.uniform(0, 10);
    const double a = rng.uniform(-4, 0);
    EXPECT_GE(brake_term(d, t, a, rc), brake_term(d, t + rng.uniform(0, 5), a, rc));
    EXPECT_LE(brake_term(d, t, a, rc), brake_term(d, t, a - rng.uniform(0, 4), rc) + 1e-15);
  }
}

TEST(TaskReward, NominalCruise) {
  const RewardConfig rc;
  const auto w = world_of({av(0, 5.25, 14)});
  EXPECT_DOUBLE_EQ(task_reward(w, 0, false, rc), 1.0);
}

TEST(TaskReward, CollisionPenalty) {
  const RewardConfig rc;
  const auto w = world_of({av(0, 5.25, 14)});
  EXPECT_DOUBLE_EQ(task_reward(w, 0, true, rc) - task_reward(w, 0, false, rc), -rc.C0);
}

TEST(TaskReward, SpacingToLeader) {
  const RewardConfig rc;
  // Leader center 9.8 m ahead: bumper gap 9.8 - 4.8 = 5 m.
  const auto w = world_of({av(0, 5.25, 14), bv(9.8, 5.25, 14)});
  EXPECT_NEAR(task_reward(w, 0, false, rc), 1.0 - 0.5, 1e-12);
  const auto lead = leading_participant(w, 0);
  EXPECT_TRUE(lead.found);
  EXPECT_EQ(lead.index, 1u);
  EXPECT_NEAR(lead.gap, 5.0, 1e-12);
}

TEST(TaskReward, ComfortFromLastControl) {
  const RewardConfig rc;
  auto w = world_of({av(0, 5.25, 14)});
  const std::vector<ControlInput> c{{-2.0, 0.0}};
  w.step(c);
  // v = 13.8 after the step; |a_lon| = 2.
  EXPECT_NEAR(task_reward(w, 0, false, rc), (1 - 0.2 / 14) - 0.5 * 0.25, 1e-12);
}

TEST(SafetyReward, DegeneratesWithoutObstacles) {
  const auto w = world_of({av(0, 5.25, 14)});
  for (auto mode : {SafetyMode::Avoid, SafetyMode::Brake}) {
    RewardConfig rc;
    rc.mode = mode;
    const auto r = compute_rewards(w, 0, false, rc);
    EXPECT_NEAR(r.r_safe, r.r_task, 1e-3);
    EXPECT_EQ(r.r_safe, safety_reward(w, 0, false, rc));
  }
}

TEST(SafetyReward, AvoidModeAgainstLeader) {
  RewardConfig rc;
  auto w = world_of({av(0, 5.25, 15), bv(4.8 + 10.0 + 1.0, 5.25, 10)});
  const std::vector<ControlInput> c{{0.0, 10.0}};
  w.step(c);
  const auto& ego = w.participant(0).state;
  const auto obs = conflicting_obstacle(w, 0);
  ASSERT_TRUE(obs.found);
  const double expected = std::exp(-obs.gap / rc.lambda_decay) * (ego.v - 10.0) * 1.0;
  EXPECT_NEAR(safety_mode_term(w, 0, rc), expected, 1e-12);
}

TEST(SafetyReward, BrakeModeTowardsCrossingPedestrian) {
  RewardConfig rc = RewardConfig::for_scenario(ScenarioId::IJ);
  ASSERT_EQ(rc.mode, SafetyMode::Brake);
  auto w = world_of({av(0, 1.75, 10), ped(30, -0.5, 1.5, 90)});
  const std::vector<ControlInput> c{{-4.0, 0.0}};
  w.step(c);
  const auto obs = conflicting_obstacle(w, 0);
  ASSERT_TRUE(obs.found);
  EXPECT_EQ(obs.index, 1u);
  const double expected = std::exp(-obs.gap / rc.lambda_decay) / (obs.ttc + rc.eps) * 1.0;
  EXPECT_NEAR(safety_mode_term(w, 0, rc), expected, 1e-12);
  EXPECT_GT(expected, 0.0);
}

TEST(RewardConfig, ModeMatchesScenario) {
  EXPECT_EQ(RewardConfig::for_scenario(ScenarioId::IJ).mode, SafetyMode::Brake);
  for (auto id : {ScenarioId::LVEB, ScenarioId::OPI, ScenarioId::RPC}) {
    EXPECT_EQ(RewardConfig::for_scenario(id).mode, SafetyMode::Avoid);
  }
  RewardConfig rc;
  rc.C0 = 0;
  EXPECT_THROW(rc.validate(), ConfigError);
}

TEST(Rewards, FiniteAndCollisionDominates) {
  for (auto id : {ScenarioId::LVEB, ScenarioId::OPI, ScenarioId::RPC, ScenarioId::IJ}) {
    auto spec = ScenarioSpec::defaults(id);
    auto w = instantiate_scenario(spec);
    const auto rc = RewardConfig::for_scenario(id);
    Rng rng(static_cast<std::uint64_t>(id));
    while (!check_termination(w, w.horizon()).done()) {
      std::vector<ControlInput> c(w.av_count());
      for (auto& ci : c) ci = {rng.uniform(-1, 1), 0.0};
      w.step(c);
      for (std::size_t i = 0; i < w.av_count(); ++i) {
        const auto r = compute_rewards(w, i, false, rc);
        EXPECT_TRUE(std::isfinite(r.r_task));
        EXPECT_TRUE(std::isfinite(r.r_safe));
        EXPECT_LT(r.r_task, rc.C0);
      }
    }
  }
}

}  // namespace
}  // namespace drsrl
