#include <cmath>

#include <gtest/gtest.h>

#include "llql/env.hpp"
#include "llql/errors.hpp"
#include "llql/evaluation.hpp"
#include "test_util.hpp"

namespace llql {
namespace {

using testing::vec;

/// Pushes in the direction of motion; swings the car out of the valley.
StepDecision energy_pump(const State& x, int) { return {vec({x(1) >= 0.0 ? 1.0 : -1.0}), Branch::LongTerm}; }

MetricSpec velocity_metrics() {
  MetricSpec m;
  m.hazard = HazardSpec{1, 0.035};
  m.tracking = TrackingSpec{1, 0.025, TrackingMode::AtGoal, {}};
  return m;
}

TEST(RunEpisode, EnergyPumpReachesGoal) {
  const MountainCar env;
  std::vector<TraceRow> trace;
  const EpisodeMetrics m = run_episode(env, 3, energy_pump, velocity_metrics(), 0, &trace);
  EXPECT_TRUE(m.success);
  EXPECT_LT(m.steps, 200);
  ASSERT_EQ(trace.size(), static_cast<std::size_t>(m.steps));
  EXPECT_EQ(trace.front().x, env.reset(3));

  // Replay the trace to recompute each metric independently.
  State x = env.reset(3);
  double reward = 0.0;
  int out = 0;
  for (const auto& row : trace) {
    const StepResult sr = env.step(x, row.u, row.step);
    reward += sr.reward;
    if (std::abs(sr.next_state(1)) > 0.035) ++out;
    x = sr.next_state;
  }
  EXPECT_TRUE(env.goal_reached(x));
  EXPECT_DOUBLE_EQ(m.cumulative_reward, reward);
  EXPECT_EQ(m.s_out, out);
  ASSERT_TRUE(m.e_v);
  EXPECT_DOUBLE_EQ(*m.e_v, std::abs(x(1) - 0.025));
  EXPECT_EQ(m.branch_counts[0], m.steps);
}

TEST(RunEpisode, FailureRunsToHorizonWithoutTrackingError) {
  const MountainCar env;
  const Actor idle = [](const State&, int) { return StepDecision{vec({0.0}), Branch::LongTerm}; };
  const EpisodeMetrics m = run_episode(env, 4, idle, velocity_metrics(), 50);
  EXPECT_FALSE(m.success);
  EXPECT_EQ(m.steps, 50);
  EXPECT_FALSE(m.e_v);
  EXPECT_EQ(m.s_out, 0);
}

TEST(RunEpisode, OverActiveAveragesTrackedSteps) {
  const Pendulum env;
  MetricSpec spec;
  spec.tracking = TrackingSpec{2, 0.0, TrackingMode::OverActive, {0, Comparison::Greater, -2.0, false}};
  std::vector<TraceRow> trace;
  const Actor idle = [](const State&, int) { return StepDecision{vec({0.0}), Branch::LongTerm}; };
  const EpisodeMetrics m = run_episode(env, 5, idle, spec, 20, &trace);
  ASSERT_TRUE(m.e_v);
  double sum = 0.0;
  State x = env.reset(5);
  for (const auto& row : trace) {
    x = env.step(x, row.u, row.step).next_state;
    sum += std::abs(x(2));
  }
  EXPECT_NEAR(*m.e_v, sum / 20.0, 1e-12);
}

TEST(RunEpisode, RejectsNonFiniteActions) {
  const MountainCar env;
  const Actor bad = [](const State&, int) { return StepDecision{vec({std::nan("")}), Branch::LongTerm}; };
  EXPECT_THROW((void)run_episode(env, 0, bad, {}), NonFiniteValue);
}

TEST(Actors, HybridAndAdjustedDispatch) {
  const MountainCar env;
  const QModel q = testing::constant_q(2, 0.0, vec({-1.0}), Mat::Constant(1, 1, 1.0));
  const DynamicsModel dyn =
      testing::constant_dynamics(vec({0.0, 0.0}), (Mat(2, 1) << 0.0, 1.0).finished(), 0.001);
  ConstraintGoal c;
  c.index = 1;
  c.bound = 0.01;
  c.margin = 0.01;
  std::mt19937_64 rng(0);
  const HybridController ctl(q, dyn, env.spec().action_bounds, ShortTermGoal{c});
  const EpisodeMetrics hm = run_episode(env, 6, hybrid_actor(ctl, rng), {}, 300);
  EXPECT_GT(hm.branch_counts[static_cast<std::size_t>(Branch::Constraint)], 0);
  EXPECT_GT(hm.branch_counts[static_cast<std::size_t>(Branch::LongTerm)], 0);

  const AdjustmentLayer layer(dyn, env.spec().action_bounds, ShortTermGoal{c});
  const EpisodeMetrics am = run_episode(env, 6, adjusted_actor([](const State&) { return vec({1.0}); }, layer), {}, 300);
  EXPECT_EQ(am.branch_counts, hm.branch_counts);
}

}  // namespace
}  // namespace llql
