#include <gtest/gtest.h>

#include "llql/errors.hpp"
#include "llql/reward_mods.hpp"
#include "test_util.hpp"

namespace llql {
namespace {

using testing::vec;

double apply(const std::string& id, double r, double x, double v, bool done = false) {
  return reward_mod(id).apply({r, vec({x, v}), done});
}

TEST(RewardMods, CatalogOrder) {
  const auto mods = reward_mod_catalog();
  ASSERT_EQ(mods.size(), 8u);
  const char* ids[] = {"t1", "t2", "t3", "t4", "c1", "c2", "c3", "c4"};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(mods[i].id, ids[i]);
}

TEST(RewardMods, TrajectoryPenaltyOnArrival) {
  EXPECT_NEAR(apply("t1", 99.9, 0.46, 0.035, true), 99.9 - 50.0, 1e-9);
  EXPECT_EQ(apply("t1", -0.1, 0.46, 0.035, false), -0.1);
}

TEST(RewardMods, TrajectoryPenaltyNearTop) {
  EXPECT_NEAR(apply("t2", -0.1, 0.46, 0.035), -0.1 - 1.0, 1e-12);
  EXPECT_EQ(apply("t2", -0.1, 0.45, 0.035), -0.1);
}

TEST(RewardMods, CombinedTrajectoryPrefersArrivalTerm) {
  EXPECT_NEAR(apply("t3", -0.1, 0.44, 0.035), -0.1, 0);
  EXPECT_NEAR(apply("t3", -0.1, 0.46, 0.035), -1.1, 1e-12);
  EXPECT_NEAR(apply("t3", 99.9, 0.46, 0.035, true), 49.9, 1e-9);
}

TEST(RewardMods, QuadraticArrivalPenalty) {
  EXPECT_NEAR(apply("t4", 99.9, 0.5, 0.035, true), 99.9 - 2.5, 1e-9);
}

TEST(RewardMods, SpeedLimitInactiveBelowThreshold) {
  for (const char* id : {"c1", "c2", "c3", "c4"}) {
    EXPECT_EQ(apply(id, -0.3, 0.0, 0.02), -0.3) << id;
    EXPECT_EQ(apply(id, -0.3, 0.0, -0.033), -0.3) << id;
  }
}

TEST(RewardMods, SpeedLimitPenalties) {
  EXPECT_DOUBLE_EQ(apply("c1", -0.3, 0.0, -0.043), -10.3);
  EXPECT_NEAR(apply("c2", -0.3, 0.0, 0.043), -1.3, 1e-12);
  EXPECT_NEAR(apply("c3", -0.3, 0.0, 0.043), -1.3, 1e-12);
  EXPECT_EQ(apply("c4", -0.3, 0.0, 0.04), -10.0);
  RewardModParams p;
  p.c4_replaces = false;
  EXPECT_DOUBLE_EQ(reward_mod("c4", p).apply({-0.3, vec({0.0, 0.04}), false}), -10.3);
}

TEST(RewardMods, TriggersMatchTheirConditions) {
  EXPECT_TRUE(reward_mod("c1").triggers({0.0, vec({0.0, 0.04}), false}));
  EXPECT_FALSE(reward_mod("c1").triggers({0.0, vec({0.0, 0.03}), false}));
  EXPECT_TRUE(reward_mod("t1").triggers({0.0, vec({0.5, 0.0}), true}));
  EXPECT_TRUE(reward_mod("t2").triggers({0.0, vec({0.5, 0.0}), false}));
}

TEST(RewardMods, UnknownId) { EXPECT_THROW((void)reward_mod("t9"), ConfigError); }

}  // namespace
}  // namespace llql
