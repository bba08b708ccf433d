#include "llql/mpc.hpp"

#include <algorithm>

#include "llql/errors.hpp"

namespace llql {

void MpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("mpc horizon must be >= 1");
  if (candidates < 1) throw ConfigError("mpc candidate count must be >= 1");
}

MpcReward mountain_car_mpc_reward(double goal_position, const std::optional<RewardMod>& mod) {
  return [goal_position, mod](const Mat& x_next, const Mat& u, Eigen::Array<bool, 1, Eigen::Dynamic>& terminated) {
    const Eigen::Index n = x_next.cols();
    Eigen::RowVectorXd r(n);
    RewardContext ctx;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double uc = std::clamp(u(0, j), -1.0, 1.0);
      double rj = -0.1 * uc * uc;
      const bool goal = x_next(0, j) >= goal_position;
      if (goal) rj += 100.0;
      if (mod) {
        ctx.reward = rj;
        ctx.x_next = x_next.col(j);
        ctx.done = goal;
        rj = mod->apply(ctx);
      }
      r(j) = rj;
      if (goal) terminated(j) = true;
    }
    return r;
  };
}

MpcPlanner::MpcPlanner(const DynamicsModel& dyn, ActionBounds bounds, MpcReward reward, MpcConfig config)
    : dyn_(&dyn), bounds_(std::move(bounds)), reward_(std::move(reward)), config_(config) {
  config_.validate();
  if (bounds_.dim() != dyn.action_dim()) throw DimensionMismatch("action bounds do not match the dynamics model");
}

Action MpcPlanner::act(const State& x, std::mt19937_64& rng) {
  const int ad = bounds_.dim();
  const int h = config_.horizon;
  const int k = config_.candidates;
  // Sequences are drawn candidate-major, step by step, component by component,
  // so the first K' candidates do not depend on K.
  std::vector<Mat> seq(static_cast<std::size_t>(h), Mat(ad, k));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 0; j < k; ++j) {
    for (int t = 0; t < h; ++t) {
      for (int i = 0; i < ad; ++i) {
        seq[static_cast<std::size_t>(t)](i, j) = bounds_.low(i) + (bounds_.high(i) - bounds_.low(i)) * unit(rng);
      }
    }
  }
  if (!config_.resample && previous_.cols() == h) {
    for (int t = 0; t < h; ++t) seq[static_cast<std::size_t>(t)].col(0) = previous_.col(std::min(t + 1, h - 1));
  }

  Mat states = x.replicate(1, k);
  Eigen::RowVectorXd score = Eigen::RowVectorXd::Zero(k);
  Eigen::Array<bool, 1, Eigen::Dynamic> terminated = Eigen::Array<bool, 1, Eigen::Dynamic>::Constant(k, false);
  for (int t = 0; t < h && !terminated.all(); ++t) {
    const Mat& u = seq[static_cast<std::size_t>(t)];
    Mat next = dyn_->predict_next(states, u);
    const Eigen::Array<bool, 1, Eigen::Dynamic> before = terminated;
    const Eigen::RowVectorXd r = reward_(next, u, terminated);
    for (int j = 0; j < k; ++j) {
      if (!before(j)) score(j) += r(j);
    }
    states = std::move(next);
  }

  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < k; ++j) {
    if (score(j) > score(best)) best = j;
  }
  best_score_ = score(best);
  previous_.resize(ad, h);
  for (int t = 0; t < h; ++t) previous_.col(t) = seq[static_cast<std::size_t>(t)].col(best);
  return previous_.col(0);
}

Action mpc_action(const DynamicsModel& dyn, const State& x, const ActionBounds& bounds, const MpcReward& reward,
                  const MpcConfig& config, std::mt19937_64& rng) {
  MpcPlanner planner(dyn, bounds, reward, config);
  return planner.act(x, rng);
}

}  // namespace llql
