#pragma once

#include <array>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "llql/controller.hpp"
#include "llql/env.hpp"

namespace llql {

/// A step counts as out of bounds when |x_{k+1}[index]| > threshold.
struct HazardSpec {
  int index = 1;
  double threshold = 0.035;
};

enum class TrackingMode {
  /// |x[index] - desired| at the state where the goal is first reached.
  AtGoal,
  /// Mean of |x_{k+1}[index] - desired| over steps whose x_k satisfies `active`.
  OverActive,
};

struct TrackingSpec {
  int index = 1;
  double desired = 0.0;
  TrackingMode mode = TrackingMode::AtGoal;
  StatePredicate active;
};

struct MetricSpec {
  std::optional<HazardSpec> hazard;
  std::optional<TrackingSpec> tracking;
};

struct EpisodeMetrics {
  /// Step at which the goal was first reached, else the number of steps run.
  int steps = 0;
  bool success = false;
  double cumulative_reward = 0.0;
  int s_out = 0;
  /// Absent when the tracking condition never arose (e.g. goal not reached).
  std::optional<double> e_v;
  /// Steps dispatched to each branch, indexed by Branch.
  std::array<int, 3> branch_counts{};
};

struct StepDecision {
  Action u;
  Branch branch = Branch::LongTerm;
};

/// Chooses the action for state x at 1-based step k.
using Actor = std::function<StepDecision(const State& x, int k)>;

struct TraceRow {
  int step = 0;
  State x;
  Action u;
  double reward = 0.0;
  Branch branch = Branch::LongTerm;
};

/// Runs one episode from reset(reset_seed) until the goal or the horizon
/// (0 uses the environment's). Appends one row per step to `trace` if given.
[[nodiscard]] EpisodeMetrics run_episode(const Environment& env, std::uint64_t reset_seed, const Actor& actor,
                                         const MetricSpec& metrics, int horizon = 0,
                                         std::vector<TraceRow>* trace = nullptr);

/// Hybrid LLQL controller as an Actor. The controller and rng must outlive it.
[[nodiscard]] Actor hybrid_actor(const HybridController& controller, std::mt19937_64& rng);

/// Nominal policy followed by the adjustment layer. Both must outlive it.
[[nodiscard]] Actor adjusted_actor(const std::function<Action(const State&)>& policy, const AdjustmentLayer& layer);

}  // namespace llql
