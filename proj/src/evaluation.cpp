#include "llql/evaluation.hpp"

#include <cmath>

#include "llql/errors.hpp"

namespace llql {

EpisodeMetrics run_episode(const Environment& env, std::uint64_t reset_seed, const Actor& actor,
                           const MetricSpec& metrics, int horizon, std::vector<TraceRow>* trace) {
  const int t_max = horizon > 0 ? horizon : env.spec().horizon;
  EpisodeMetrics m;
  State x = env.reset(reset_seed);
  double e_sum = 0.0;
  int e_count = 0;
  for (int k = 1; k <= t_max; ++k) {
    const StepDecision d = actor(x, k);
    if (!d.u.allFinite()) throw NonFiniteValue("actor produced a non-finite action at step " + std::to_string(k));
    const StepResult sr = env.step(x, d.u, k);
    if (trace) trace->push_back({k, x, d.u, sr.reward, d.branch});
    ++m.branch_counts[static_cast<std::size_t>(d.branch)];
    m.cumulative_reward += sr.reward;
    m.steps = k;
    if (metrics.hazard && std::abs(sr.next_state(metrics.hazard->index)) > metrics.hazard->threshold) ++m.s_out;
    if (metrics.tracking && metrics.tracking->mode == TrackingMode::OverActive && metrics.tracking->active.holds(x)) {
      e_sum += std::abs(sr.next_state(metrics.tracking->index) - metrics.tracking->desired);
      ++e_count;
    }
    if (sr.goal) {
      m.success = true;
      if (metrics.tracking && metrics.tracking->mode == TrackingMode::AtGoal) {
        m.e_v = std::abs(sr.next_state(metrics.tracking->index) - metrics.tracking->desired);
      }
    }
    x = sr.next_state;
    if (sr.done) break;
  }
  if (e_count > 0) m.e_v = e_sum / e_count;
  return m;
}

Actor hybrid_actor(const HybridController& controller, std::mt19937_64& rng) {
  return [&controller, &rng](const State& x, int k) {
    HybridDecision d = controller.decide(x, k, rng);
    return StepDecision{std::move(d.action.clipped), d.branch};
  };
}

Actor adjusted_actor(const std::function<Action(const State&)>& policy, const AdjustmentLayer& layer) {
  return [policy, &layer](const State& x, int k) {
    HybridDecision d = layer.adjust(policy(x), x, k);
    return StepDecision{std::move(d.action.clipped), d.branch};
  };
}

}  // namespace llql
