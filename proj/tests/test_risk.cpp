#include <gtest/gtest.h>

#include <cmath>

#include "drsrl/errors.hpp"
#include "drsrl/random.hpp"
#include "drsrl/risk.hpp"
#include "drsrl/scenario.hpp"
#include "support.hpp"

namespace drsrl {
namespace {

using test::av;
using test::bv;
using test::ped;
using test::world_of;

ParticipantState at(double x, double y, double v, double theta = 0.0,
                    ParticipantKind kind = ParticipantKind::BV) {
  ParticipantState s;
  s.x = x;
  s.y = y;
  s.v = v;
  s.theta = theta;
  s.kind = kind;
  s.lane = lane_from_y(y, WorldConfig{});
  return s;
}

TEST(Ttc, GapOverClosingSpeed) {
  const WorldConfig cfg;
  // 50 m bumper to bumper: centers 50 + 4.8 apart.
  EXPECT_DOUBLE_EQ(compute_ttc(at(0, 5.25, 20), at(54.8, 5.25, 10), cfg), 5.0);
}

TEST(Ttc, NotClosingIsInfinite) {
  const WorldConfig cfg;
  EXPECT_TRUE(std::isinf(compute_ttc(at(0, 5.25, 10), at(30, 5.25, 12), cfg)));
  EXPECT_TRUE(std::isinf(compute_ttc(at(0, 5.25, 10), at(-30, 5.25, 0), cfg)));  // behind
  EXPECT_TRUE(std::isinf(compute_ttc(at(0, 5.25, 10), at(30, 8.75, 0), cfg)));   // other lane
}

TEST(Ttc, OverlapIsZero) {
  const WorldConfig cfg;
  EXPECT_EQ(compute_ttc(at(0, 5.25, 10), at(2, 5.25, 10), cfg), 0.0);
  EXPECT_EQ(compute_ttc(at(0, 5.25, 10), at(4.8, 5.25, 10), cfg), 0.0);
}

TEST(Ttc, TranslationInvariantAndNonNegative) {
  const WorldConfig cfg;
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const auto a = at(rng.uniform(-50, 50), rng.uniform(0, 10), rng.uniform(0, 20));
    const auto b = at(rng.uniform(-50, 50), rng.uniform(0, 10), rng.uniform(0, 20));
    const double tx = rng.uniform(-100, 100);
    const double t0 = compute_ttc(a, b, cfg);
    const double t1 = compute_ttc(at(a.x + tx, a.y, a.v), at(b.x + tx, b.y, b.v), cfg);
    EXPECT_GE(t0, 0.0);
    if (std::isinf(t0)) {
      EXPECT_TRUE(std::isinf(t1));
    } else {
      EXPECT_NEAR(t0, t1, 1e-9 * (1 + t0));
    }
  }
}

TEST(Pet, SimultaneousArrival) {
  const WorldConfig cfg;
  // Vehicle front 20 m before the crossing at 10 m/s; pedestrian 3 m below
  // the lane center walking north at 1.5 m/s. Both need 2 s.
  const auto veh = at(100 - 20 - 2.4, cfg.lane_center(1), 10, 0, ParticipantKind::AV);
  const auto p = at(100, cfg.lane_center(1) - 3.0, 1.5, 90, ParticipantKind::Ped);
  EXPECT_NEAR(compute_pet(veh, p, cfg), 0.0, 1e-9);
}

TEST(Pet, WalkingAwayIsInfinite) {
  const WorldConfig cfg;
  const auto veh = at(50, cfg.lane_center(1), 10, 0, ParticipantKind::AV);
  const auto p = at(100, cfg.lane_center(1) - 3.0, 1.5, 270, ParticipantKind::Ped);
  EXPECT_TRUE(std::isinf(compute_pet(veh, p, cfg)));
  const auto still = at(100, cfg.lane_center(1) - 3.0, 0.0, 90, ParticipantKind::Ped);
  EXPECT_TRUE(std::isinf(compute_pet(veh, still, cfg)));
}

TEST(Pet, EtaDifference) {
  const WorldConfig cfg;
  const auto veh = at(100 - 20 - 2.4, cfg.lane_center(1), 10, 0, ParticipantKind::AV);  // 2 s
  const auto p = at(100, cfg.lane_center(1) - 7.5, 1.5, 90, ParticipantKind::Ped);      // 5 s
  EXPECT_NEAR(compute_pet(veh, p, cfg), 3.0, 1e-9);
}

TEST(Pet, PedestrianInsideBandHasZeroEta) {
  const WorldConfig cfg;
  const auto veh = at(100 - 10 - 2.4, cfg.lane_center(1), 10, 0, ParticipantKind::AV);  // 1 s
  const auto p = at(100, cfg.lane_center(1) + 0.5, 1.5, 90, ParticipantKind::Ped);
  EXPECT_NEAR(compute_pet(veh, p, cfg), 1.0, 1e-9);
}

TEST(Urgency, ThresholdRelativeReciprocal) {
  const RiskConfig rc;
  EXPECT_EQ(normalize_urgency(rc.tau_v2v, rc.tau_v2v, rc.eps_norm), 1.0);
  EXPECT_DOUBLE_EQ(normalize_urgency(2 * rc.tau_v2v, rc.tau_v2v, rc.eps_norm), 0.5);
  EXPECT_EQ(normalize_urgency(kInfinity, rc.tau_v2v, rc.eps_norm), rc.eps_norm);
  EXPECT_EQ(normalize_urgency(0.0, rc.tau_v2v, rc.eps_norm), 1.0);
  EXPECT_EQ(normalize_urgency(-1.0, rc.tau_v2v, rc.eps_norm), 1.0);
  EXPECT_EQ(normalize_urgency(1e9, rc.tau_v2v, rc.eps_norm), rc.eps_norm);
  const auto u = normalize_urgency(6.0, 4.0, rc);
  EXPECT_DOUBLE_EQ(u.ttc_norm, 0.5);
  EXPECT_DOUBLE_EQ(u.pet_norm, 0.5);
}

TEST(Fusion, WeightedSum) {
  const RiskConfig rc;
  EXPECT_DOUBLE_EQ(fuse_risk(0.5, 0.0, {}, rc), 0.2);
  EXPECT_DOUBLE_EQ(fuse_risk(0.5, rc.eps_norm, {}, rc), 0.2 + 0.3 * 0.01);
  EXPECT_DOUBLE_EQ(fuse_risk(0.2, 0.5, {true, false, true}, rc), 0.08 + 0.15 + 0.3 * 0.65);
}

TEST(Fusion, FloorAndCeiling) {
  RiskConfig rc;
  EXPECT_EQ(fuse_risk(rc.eps_norm, rc.eps_norm, {}, rc), rc.w0);
  rc.beta = {1.0, 0.0, 0.0};
  EXPECT_EQ(fuse_risk(1.0, 1.0, {true, false, false}, rc), 1.0);
}

TEST(Fusion, MonotoneInTtc) {
  const RiskConfig rc;
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double pet = rng.uniform(0.01, 10);
    const std::array<bool, 3> ev{rng.below(2) == 1, rng.below(2) == 1, rng.below(2) == 1};
    const double t1 = rng.uniform(0.01, 20);
    const double t0 = t1 * rng.uniform(0.1, 1.0);  // shorter TTC
    const auto u0 = normalize_urgency(t0, pet, rc);
    const auto u1 = normalize_urgency(t1, pet, rc);
    const double r0 = fuse_risk(u0.ttc_norm, u0.pet_norm, ev, rc);
    const double r1 = fuse_risk(u1.ttc_norm, u1.pet_norm, ev, rc);
    EXPECT_GE(r0, r1);
    EXPECT_GE(r0, rc.w0);
    EXPECT_LE(r0, 1.0);
  }
}

TEST(SafetyWeight, Piecewise) {
  const RiskConfig rc;
  EXPECT_EQ(safety_weight(rc.tau_risk, rc), rc.alpha0);
  EXPECT_EQ(safety_weight(rc.w0, rc), 1.0 - rc.alpha0);
  EXPECT_EQ(safety_weight(0.95, rc), 0.8);
  EXPECT_DOUBLE_EQ(safety_weight(0.1, rc), 0.2);
}

TEST(RiskConfig, Validation) {
  RiskConfig rc;
  EXPECT_NO_THROW(rc.validate());
  rc.alpha0 = 0.5;
  EXPECT_THROW(rc.validate(), ConfigError);
  rc = {};
  rc.beta = {0.5, 0.5, 0.5};
  EXPECT_THROW(rc.validate(), ConfigError);
  rc = {};
  rc.w0 = 0;
  EXPECT_THROW(rc.validate(), ConfigError);
}

TEST(Dcz, EmptyRiskWorld) {
  const auto w = world_of({av(0, 5.25, 10), bv(50, 5.25, 15)});
  const auto d = in_dcz(w, RiskConfig{});
  EXPECT_FALSE(d[0]);
  const auto r = assess_risk(w, RiskConfig{});
  EXPECT_EQ(r[0].risk, RiskConfig{}.w0);
}

TEST(Dcz, ShortTtc) {
  // Gap 15 m, closing at 10 m/s: TTC 1.5 s.
  const auto w = world_of({av(0, 5.25, 15), bv(19.8, 5.25, 5)});
  const auto r = assess_risk(w, RiskConfig{});
  EXPECT_NEAR(r[0].min_ttc, 1.5, 1e-12);
  EXPECT_TRUE(r[0].in_dcz);
  EXPECT_EQ(r[0].ttc_norm, 1.0);
  EXPECT_NEAR(r[0].risk, 0.4 + 0.3 * 0.01, 1e-12);
}

TEST(Dcz, EventOnlyWithinRadius) {
  auto lead = bv(20, 8.75, 10);
  lead.script.trigger = Script::Trigger::Time;
  lead.script.trigger_value = 0.0;
  lead.script.on_trigger = Script::Mode::Brake;
  lead.script.tag = EventTag::LeadBrake;
  auto w = world_of({av(0, 5.25, 10), av(-80, 5.25, 10), lead});
  ASSERT_EQ(w.trigger_events(), std::vector<EventTag>{EventTag::LeadBrake});
  const auto r = assess_risk(w, RiskConfig{});
  EXPECT_TRUE(std::isinf(r[0].min_ttc));
  EXPECT_TRUE(r[0].event_flags[0]);
  EXPECT_TRUE(r[0].in_dcz);
  EXPECT_NEAR(r[0].risk, 0.3 * 0.4 + 0.4 * 0.01 + 0.3 * 0.01, 1e-12);
  EXPECT_FALSE(r[1].in_dcz);  // 100 m from the source
  EXPECT_NEAR(scene_risk(w, r, RiskConfig{}), r[0].risk, 0.0);
}

TEST(Dcz, RolloutInvariants) {
  const RiskConfig rc;
  for (auto id : {ScenarioId::LVEB, ScenarioId::OPI, ScenarioId::RPC, ScenarioId::IJ}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto spec = ScenarioSpec::defaults(id);
      spec.seed = seed;
      auto w = instantiate_scenario(spec);
      const std::vector<ControlInput> idle(w.av_count());
      while (!check_termination(w, w.horizon()).done()) {
        const auto reports = assess_risk(w, rc);
        for (const auto& r : reports) {
          EXPECT_GE(r.risk, rc.w0);
          EXPECT_LE(r.risk, 1.0);
          EXPECT_GT(r.ttc_norm, 0.0);
          EXPECT_LE(r.ttc_norm, 1.0);
          EXPECT_GT(r.pet_norm, 0.0);
          EXPECT_LE(r.pet_norm, 1.0);
          if (r.ttc_norm == 1.0 || r.pet_norm == 1.0) EXPECT_TRUE(r.in_dcz);
          const double a = safety_weight(r.risk, rc);
          EXPECT_TRUE(a == rc.alpha0 || a == 1.0 - rc.alpha0);
        }
        const double scene = scene_risk(w, reports, rc);
        for (std::size_t i = 0; i < reports.size(); ++i) {
          if (!w.participant(i).exited) EXPECT_GE(scene, reports[i].risk);
        }
        w.step(idle);
      }
    }
  }
}

}  // namespace
}  // namespace drsrl
