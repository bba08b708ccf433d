#include "llql/reward_mods.hpp"

#include <cmath>

#include "llql/errors.hpp"

namespace llql {

std::vector<RewardMod> reward_mod_catalog(const RewardModParams& p) {
  const double vd = p.desired_velocity;
  const double thr = p.speed_threshold;
  const double top = p.top_position;
  auto vel = [](const RewardContext& c) { return c.x_next(1); };
  auto pos = [](const RewardContext& c) { return c.x_next(0); };
  auto fast = [thr, vel](const RewardContext& c) { return std::abs(vel(c)) > thr; };
  auto done = [](const RewardContext& c) { return c.done; };
  auto high = [top, pos](const RewardContext& c) { return pos(c) > top; };

  std::vector<RewardMod> mods;
  mods.push_back({"t1", "r - 5000|v - v_d| if done",
                  [=](const RewardContext& c) { return c.done ? c.reward - 5000.0 * std::abs(vel(c) - vd) : c.reward; },
                  done});
  mods.push_back({"t2", "r - 100|v - v_d| if x > 0.45",
                  [=](const RewardContext& c) { return high(c) ? c.reward - 100.0 * std::abs(vel(c) - vd) : c.reward; },
                  high});
  // Both rows of t3 can hold on the final step; the done row takes precedence.
  mods.push_back({"t3", "r - 100|v - v_d| if x > 0.45; r - 5000|v - v_d| if done",
                  [=](const RewardContext& c) {
                    if (c.done) return c.reward - 5000.0 * std::abs(vel(c) - vd);
                    if (high(c)) return c.reward - 100.0 * std::abs(vel(c) - vd);
                    return c.reward;
                  },
                  [=](const RewardContext& c) { return c.done || high(c); }});
  mods.push_back({"t4", "r - 25000 (v - v_d)^2 if done",
                  [=](const RewardContext& c) {
                    const double e = vel(c) - vd;
                    return c.done ? c.reward - 25000.0 * e * e : c.reward;
                  },
                  done});
  mods.push_back({"c1", "r - 10 if |v| > 0.033",
                  [=](const RewardContext& c) { return fast(c) ? c.reward - 10.0 : c.reward; }, fast});
  mods.push_back({"c2", "r - 100 (|v| - 0.033) if |v| > 0.033",
                  [=](const RewardContext& c) {
                    return fast(c) ? c.reward - 100.0 * (std::abs(vel(c)) - thr) : c.reward;
                  },
                  fast});
  mods.push_back({"c3", "r - (100 (|v| - 0.033))^2 if |v| > 0.033",
                  [=](const RewardContext& c) {
                    const double e = 100.0 * (std::abs(vel(c)) - thr);
                    return fast(c) ? c.reward - e * e : c.reward;
                  },
                  fast});
  const bool replaces = p.c4_replaces;
  mods.push_back({"c4", replaces ? "-10 if |v| > 0.033" : "r - 10 if |v| > 0.033",
                  [=](const RewardContext& c) {
                    if (!fast(c)) return c.reward;
                    return replaces ? -10.0 : c.reward - 10.0;
                  },
                  fast});
  return mods;
}

RewardMod reward_mod(const std::string& id, const RewardModParams& params) {
  for (auto& m : reward_mod_catalog(params)) {
    if (m.id == id) return m;
  }
  throw ConfigError("unknown reward modification '" + id + "' (expected t1..t4 or c1..c4)");
}

}  // namespace llql
