#pragma once

#include <functional>
#include <optional>
#include <random>

#include "llql/dynamics.hpp"
#include "llql/env.hpp"
#include "llql/reward_mods.hpp"

namespace llql {

struct MpcConfig {
  int horizon = 15;
  int candidates = 1000;
  /// Draw fresh sequences every step. When false the previous best sequence,
  /// shifted by one step, replaces the first candidate.
  bool resample = true;

  void validate() const;
};

/// Scores one predicted transition of a rollout. Columns of `x_next` and `u`
/// are candidates; `terminated` marks rollouts that already hit a terminal
/// state (their later steps are not scored) and may be set by the callee.
using MpcReward = std::function<Eigen::RowVectorXd(const Mat& x_next, const Mat& u,
                                                   Eigen::Array<bool, 1, Eigen::Dynamic>& terminated)>;

/// Mountain car step reward on predicted states: -0.1 u^2, +100 the first time
/// the predicted position reaches the goal, then the optional modification.
[[nodiscard]] MpcReward mountain_car_mpc_reward(double goal_position, const std::optional<RewardMod>& mod);

/// Random-shooting planner over a learned dynamics model.
class MpcPlanner {
 public:
  MpcPlanner(const DynamicsModel& dyn, ActionBounds bounds, MpcReward reward, MpcConfig config);

  /// First action of the highest-scoring sampled sequence (ties: lowest index).
  [[nodiscard]] Action act(const State& x, std::mt19937_64& rng);
  /// Undiscounted score of the best sequence chosen by the last act().
  [[nodiscard]] double last_best_score() const { return best_score_; }
  void reset() { previous_.resize(0, 0); }

 private:
  const DynamicsModel* dyn_;
  ActionBounds bounds_;
  MpcReward reward_;
  MpcConfig config_;
  Mat previous_;  // action_dim x horizon
  double best_score_ = 0.0;
};

/// One-shot form of MpcPlanner::act with per-step resampling.
[[nodiscard]] Action mpc_action(const DynamicsModel& dyn, const State& x, const ActionBounds& bounds,
                                const MpcReward& reward, const MpcConfig& config, std::mt19937_64& rng);

}  // namespace llql
