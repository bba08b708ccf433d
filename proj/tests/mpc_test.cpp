#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "llql/errors.hpp"
#include "llql/mpc.hpp"
#include "test_util.hpp"

namespace llql {
namespace {

using testing::vec;

const ActionBounds kUnit{vec({-1.0}), vec({1.0})};

DynamicsModel still_car() {
  return testing::constant_dynamics(vec({0.0, 0.0}), (Mat(2, 1) << 0.0, 1.0).finished(), 0.001);
}

TEST(Mpc, SingleCandidateReturnsItsFirstAction) {
  const DynamicsModel dyn = still_car();
  double seen = std::numeric_limits<double>::quiet_NaN();
  int calls = 0;
  MpcReward reward = [&](const Mat&, const Mat& u, Eigen::Array<bool, 1, Eigen::Dynamic>&) {
    if (calls++ == 0) seen = u(0, 0);
    return Eigen::RowVectorXd::Zero(u.cols()).eval();
  };
  std::mt19937_64 rng(1);
  const Action a = mpc_action(dyn, vec({-0.5, 0.0}), kUnit, reward, {5, 1, true}, rng);
  EXPECT_EQ(calls, 5);
  EXPECT_EQ(a(0), seen);
}

TEST(Mpc, OneStepPicksSmallestAction) {
  const DynamicsModel dyn = still_car();
  Mat first;
  MpcReward base = mountain_car_mpc_reward(0.45, std::nullopt);
  MpcReward reward = [&](const Mat& x, const Mat& u, Eigen::Array<bool, 1, Eigen::Dynamic>& t) {
    first = u;
    return base(x, u, t);
  };
  std::mt19937_64 rng(2);
  const Action a = mpc_action(dyn, vec({-0.5, 0.0}), kUnit, reward, {1, 200, true}, rng);
  EXPECT_EQ(std::abs(a(0)), first.cwiseAbs().minCoeff());
}

TEST(Mpc, MoreCandidatesNeverScoreWorse) {
  const DynamicsModel dyn = still_car();
  const MpcReward reward = mountain_car_mpc_reward(0.45, std::nullopt);
  double prev = -std::numeric_limits<double>::infinity();
  for (int k : {1, 10, 100, 1000}) {
    std::mt19937_64 rng(3);
    MpcPlanner planner(dyn, kUnit, reward, {4, k, true});
    (void)planner.act(vec({-0.5, 0.0}), rng);
    EXPECT_GE(planner.last_best_score(), prev);
    prev = planner.last_best_score();
  }
}

TEST(Mpc, GoalBonusEndsScoring) {
  // Position rises by 0.1 per unit of action; the goal sits just ahead.
  const DynamicsModel dyn =
      testing::constant_dynamics(vec({0.0, 0.0}), (Mat(2, 1) << 100.0, 0.0).finished(), 0.001);
  const MpcReward reward = mountain_car_mpc_reward(0.45, std::nullopt);
  std::mt19937_64 rng(4);
  MpcPlanner planner(dyn, kUnit, reward, {10, 500, true});
  (void)planner.act(vec({0.4, 0.0}), rng);
  EXPECT_GT(planner.last_best_score(), 99.0);
  EXPECT_LT(planner.last_best_score(), 100.0);
}

TEST(Mpc, RewardModificationIsApplied) {
  const DynamicsModel dyn = still_car();
  const MpcReward reward = mountain_car_mpc_reward(0.45, reward_mod("c4"));
  Eigen::Array<bool, 1, Eigen::Dynamic> term = Eigen::Array<bool, 1, Eigen::Dynamic>::Constant(2, false);
  const Mat x = (Mat(2, 2) << 0.0, 0.0, 0.02, 0.04).finished();
  const Eigen::RowVectorXd r = reward(x, (Mat(1, 2) << 1.0, 1.0).finished(), term);
  EXPECT_DOUBLE_EQ(r(0), -0.1);
  EXPECT_EQ(r(1), -10.0);
  EXPECT_FALSE(term.any());
}

TEST(Mpc, WarmStartReusesShiftedSequence) {
  const DynamicsModel dyn = still_car();
  const MpcReward reward = mountain_car_mpc_reward(0.45, std::nullopt);
  std::mt19937_64 rng(5);
  MpcPlanner planner(dyn, kUnit, reward, {3, 50, false});
  (void)planner.act(vec({-0.5, 0.0}), rng);
  const double before = planner.last_best_score();
  (void)planner.act(vec({-0.5, 0.0}), rng);
  // The shifted sequence repeats its last step, so it can only lose one step's cost.
  EXPECT_GE(planner.last_best_score(), before - 0.1);
}

TEST(Mpc, SeedDeterminism) {
  const DynamicsModel dyn = still_car();
  const MpcReward reward = mountain_car_mpc_reward(0.45, std::nullopt);
  std::mt19937_64 a(6), b(6);
  EXPECT_EQ(mpc_action(dyn, vec({-0.5, 0.0}), kUnit, reward, {}, a),
            mpc_action(dyn, vec({-0.5, 0.0}), kUnit, reward, {}, b));
}

TEST(Mpc, RejectsBadConfig) {
  const DynamicsModel dyn = still_car();
  const MpcReward reward = mountain_car_mpc_reward(0.45, std::nullopt);
  EXPECT_THROW(MpcPlanner(dyn, kUnit, reward, {0, 10, true}), ConfigError);
  EXPECT_THROW(MpcPlanner(dyn, kUnit, reward, {5, 0, true}), ConfigError);
}

}  // namespace
}  // namespace llql
