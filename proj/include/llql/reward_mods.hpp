#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "llql/types.hpp"

namespace llql {

/// Inputs of a reward modification for one mountain car step. `x_next` is
/// the state emitted by the step, so position/velocity are post-step values.
struct RewardContext {
  double reward = 0.0;
  State x_next;
  bool done = false;
};

/// One of the engineered reward functions used by the reward-shaping
/// baselines: t1..t4 encode the desired arrival velocity, c1..c4 the speed limit.
struct RewardMod {
  std::string id;
  std::string description;
  std::function<double(const RewardContext&)> apply;
  /// Condition under which `apply` differs from the identity.
  std::function<bool(const RewardContext&)> triggers;
};

struct RewardModParams {
  double desired_velocity = 0.025;
  double speed_threshold = 0.033;
  double top_position = 0.45;
  /// r_c4 replaces the reward with -10; when false it subtracts 10 instead.
  bool c4_replaces = true;
};

[[nodiscard]] std::vector<RewardMod> reward_mod_catalog(const RewardModParams& params = {});
/// Looks up t1..t4 / c1..c4 (throws ConfigError otherwise).
[[nodiscard]] RewardMod reward_mod(const std::string& id, const RewardModParams& params = {});

}  // namespace llql
