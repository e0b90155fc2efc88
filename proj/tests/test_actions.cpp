#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "drsrl/actions.hpp"
#include "drsrl/world.hpp"
#include "support.hpp"

namespace drsrl {
namespace {

using test::av;
using test::bv;
using test::world_of;

TEST(ActionTable, CoupledCount) {
  static_assert(kAccelLevels * kSteerLevels == 143);
  static_assert(kAccelLevels + kSteerLevels - 1 == 23);
  const ActionTable table;
  EXPECT_EQ(table.size(), 23u);
  EXPECT_EQ(ActionTable::uncoupled_size(), 143u);
}

TEST(ActionTable, LayoutAndSpacing) {
  const ActionTable table(4.0, 30.0);
  for (std::size_t i = 0; i < 11; ++i) {
    EXPECT_NEAR(table[i].accel, -4.0 + 0.8 * static_cast<double>(i), 1e-12);
    EXPECT_EQ(table[i].steer_deg, 0.0);
  }
  std::vector<double> steer;
  for (std::size_t i = 11; i < 23; ++i) {
    EXPECT_EQ(table[i].accel, 0.0);
    EXPECT_NE(table[i].steer_deg, 0.0);
    steer.push_back(table[i].steer_deg);
  }
  const std::vector<double> expected{-30, -25, -20, -15, -10, -5, 5, 10, 15, 20, 25, 30};
  ASSERT_EQ(steer.size(), expected.size());
  for (std::size_t i = 0; i < steer.size(); ++i) EXPECT_NEAR(steer[i], expected[i], 1e-12);
  EXPECT_EQ(table.idle_index(), 5u);
  EXPECT_EQ(table[5], (ActionEntry{0.0, 0.0}));
}

TEST(ActionTable, IdleAppearsOnceAndEntriesDistinct) {
  const ActionTable table;
  std::set<std::pair<double, double>> seen;
  int idle = 0;
  for (const auto& e : table.entries()) {
    seen.insert({e.accel, e.steer_deg});
    if (e.accel == 0.0 && e.steer_deg == 0.0) ++idle;
    EXPECT_TRUE(e.accel == 0.0 || e.steer_deg == 0.0);
  }
  EXPECT_EQ(idle, 1);
  EXPECT_EQ(seen.size(), 23u);
}

TEST(Mask, StandstillBlocksBraking) {
  const ActionTable table;
  const auto w = world_of({av(0, 5.25, 0)});
  const auto m = mask_actions(w, 0, table, MaskConfig{});
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (table[k].accel < 0) EXPECT_EQ(m[k], 0) << k;
  }
  EXPECT_EQ(m[table.idle_index()], 1);
}

TEST(Mask, ShortTtcBlocksAcceleration) {
  const ActionTable table;
  // Gap 10 m bumper to bumper, closing at 10 m/s: TTC = 1 s.
  const auto w = world_of({av(0, 5.25, 15), bv(14.8, 5.25, 5)});
  EXPECT_NEAR(min_ttc_ahead(w, 0, 2.3), 1.0, 1e-12);
  const auto m = mask_actions(w, 0, table, MaskConfig{});
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (table[k].accel > 0) EXPECT_EQ(m[k], 0) << k;
    if (table[k].accel < 0) EXPECT_EQ(m[k], 1) << k;
  }
}

TEST(Mask, LongTtcAllowsAcceleration) {
  const ActionTable table;
  const auto w = world_of({av(0, 5.25, 15), bv(100, 5.25, 5)});
  const auto m = mask_actions(w, 0, table, MaskConfig{});
  for (std::size_t k = 0; k < 11; ++k) EXPECT_EQ(m[k], 1) << k;
}

TEST(Mask, RightmostLaneBlocksRightSteering) {
  const ActionTable table;
  for (double y : {0.95, 1.75, 3.0}) {
    const auto w = world_of({av(0, y, 12)});
    const auto m = mask_actions(w, 0, table, MaskConfig{});
    for (std::size_t k = 11; k < 23; ++k) {
      if (table[k].steer_deg < 0) EXPECT_EQ(m[k], 0) << "y=" << y << " k=" << k;
    }
  }
}

TEST(Mask, LeftmostLaneBlocksLeftSteering) {
  const ActionTable table;
  const auto w = world_of({av(0, 8.75, 12)});
  const auto m = mask_actions(w, 0, table, MaskConfig{});
  for (std::size_t k = 11; k < 23; ++k) {
    if (table[k].steer_deg > 0) EXPECT_EQ(m[k], 0) << k;
  }
}

TEST(Mask, MiddleLaneAllowsModerateSteering) {
  const ActionTable table;
  const auto w = world_of({av(0, 5.25, 12)});
  const auto m = mask_actions(w, 0, table, MaskConfig{});
  for (std::size_t k = 11; k < 23; ++k) {
    if (std::abs(table[k].steer_deg) <= 10) EXPECT_EQ(m[k], 1) << k;
  }
}

TEST(Mask, HeadingLimit) {
  const ActionTable table;
  // Already at 59 degrees; the gentlest left turn at 10 m/s adds 1.86.
  const auto w = world_of({av(0, 5.25, 10, 59)});
  const auto m = mask_actions(w, 0, table, MaskConfig{});
  for (std::size_t k = 11; k < 23; ++k) {
    if (table[k].steer_deg > 0) EXPECT_EQ(m[k], 0) << k;
  }
}

TEST(Mask, LaneChangeCooldown) {
  const ActionTable table;
  auto w = world_of({av(0, 3.45, 12, 10)});
  // Crossing into lane 1 stamps the lane-change time.
  const std::vector<ControlInput> idle(1);
  w.step(idle);
  ASSERT_EQ(w.participant(0).state.lane, 1);
  const auto m = mask_actions(w, 0, table, MaskConfig{});
  for (std::size_t k = 11; k < 23; ++k) {
    if (table[k].steer_deg > 0) EXPECT_EQ(m[k], 0) << k;  // turning further out
  }
  bool straighten = false;
  for (std::size_t k = 11; k < 23; ++k) straighten = straighten || (table[k].steer_deg < 0 && m[k]);
  EXPECT_TRUE(straighten);
}

TEST(Mask, HeadingTowardEdgeWithoutRoomBlocksStraightActions) {
  const ActionTable table;
  // phi = -20 deg at 12 m/s: next y = 1.5 - 1.2 sin 20 = 1.090, margin 0.190 m,
  // straightening needs (2.7 / tan 30)(1 - cos 20) = 0.282 m.
  const auto w = world_of({av(0, 1.5, 12, 340)});
  const auto m = mask_actions(w, 0, table, MaskConfig{});
  for (std::size_t k = 0; k < 11; ++k) {
    if (k != table.idle_index()) EXPECT_EQ(m[k], 0) << k;
  }
  EXPECT_EQ(m[table.idle_index()], 1);
  for (std::size_t k = 11; k < 23; ++k) {
    if (table[k].steer_deg > 0 && table[k].steer_deg <= 20) EXPECT_EQ(m[k], 1) << table[k].steer_deg;
  }
  // Same heading mid-road: plenty of room.
  const auto mid = mask_actions(world_of({av(0, 5.25, 12, 340)}), 0, table, MaskConfig{});
  for (std::size_t k = 0; k < 11; ++k) EXPECT_EQ(mid[k], 1) << k;
}

TEST(Mask, IdleAlwaysFeasible) {
  const ActionTable table;
  for (double v : {0.0, 5.0, 20.0}) {
    for (double th : {0.0, 45.0, 300.0}) {
      const auto w = world_of({av(0, 0.95, v, th), bv(5.0, 0.95, 0)});
      EXPECT_EQ(mask_actions(w, 0, table, MaskConfig{})[table.idle_index()], 1);
    }
  }
}

}  // namespace
}  // namespace drsrl
