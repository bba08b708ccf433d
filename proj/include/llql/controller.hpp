#pragma once

#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "llql/dynamics.hpp"
#include "llql/qmodel.hpp"

namespace llql {

/// Threshold on the constraint curvature term a (d^T d)^{-1} a^T (or ||a||^2
/// for the approximation) below which the action cannot move the
/// constrained component.
inline constexpr double kEpsKkt = 1e-16;

/// A synthesized action before and after clipping to the action bounds.
struct SynthesizedAction {
  Action unclipped;
  Action clipped;
  /// ||d|| ~ 0: a uniform random in-bounds action was drawn.
  bool random_fallback = false;
  /// A singular stacked system forced a fallback to the base action.
  bool solve_fallback = false;
};

/// Desired values for selected components of the next state. An empty
/// index list means every component is tracked and `values` is a full state.
struct StateTarget {
  Vec values;
  std::vector<int> indices;

  [[nodiscard]] std::vector<int> resolved_indices(int state_dim) const;
};

enum class BoundSide { Upper, Lower };

/// x^i_{k+1} <= bound (Upper) or x^i_{k+1} >= bound (Lower).
struct StateConstraint {
  int index = 0;
  double bound = 0.0;
  BoundSide side = BoundSide::Upper;
};

struct KktSolution {
  double lambda = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  Action u;
  Action clipped;
  /// Predicted constrained component at the unclipped action.
  double predicted = 0.0;
  /// Predicted constrained component at the clipped action.
  double predicted_clipped = 0.0;
  /// Clipping broke the constraint that held before clipping.
  bool clipping_violates = false;
};

// ------------------------------------------------------------ local-model math

[[nodiscard]] SynthesizedAction long_term_action(const LocalAdvantage& adv, const ActionBounds& bounds,
                                                 std::mt19937_64& rng);

[[nodiscard]] SynthesizedAction trajectory_action(const LocalAdvantage& adv, const LocalDynamics& dyn,
                                                  const State& x, const StateTarget& target, double gamma1,
                                                  double gamma2, const ActionBounds& bounds, std::mt19937_64& rng);

[[nodiscard]] KktSolution constraint_action(const LocalAdvantage& adv, const LocalDynamics& dyn, const State& x,
                                            const StateConstraint& constraint, const ActionBounds& bounds);

[[nodiscard]] SynthesizedAction approx_trajectory_action(const Action& u_nominal, const LocalDynamics& dyn,
                                                         const State& x, const StateTarget& target, double gamma1,
                                                         double gamma2, const ActionBounds& bounds);

[[nodiscard]] KktSolution approx_constraint_action(const Action& u_nominal, const LocalDynamics& dyn, const State& x,
                                                   const StateConstraint& constraint, const ActionBounds& bounds);

// ----------------------------------------------------------- model-level entry

[[nodiscard]] SynthesizedAction long_term_action(const QModel& q, const State& x, const ActionBounds& bounds,
                                                 std::mt19937_64& rng);

[[nodiscard]] SynthesizedAction trajectory_action(const QModel& q, const DynamicsModel& dyn, const State& x,
                                                  const StateTarget& target, double gamma1, double gamma2,
                                                  const ActionBounds& bounds, std::mt19937_64& rng);

[[nodiscard]] KktSolution constraint_action(const QModel& q, const DynamicsModel& dyn, const State& x,
                                            const StateConstraint& constraint, const ActionBounds& bounds);

[[nodiscard]] SynthesizedAction approx_trajectory_action(const Action& u_nominal, const DynamicsModel& dyn,
                                                         const State& x, const StateTarget& target, double gamma1,
                                                         double gamma2, const ActionBounds& bounds);

[[nodiscard]] KktSolution approx_constraint_action(const Action& u_nominal, const DynamicsModel& dyn,
                                                   const State& x, const StateConstraint& constraint,
                                                   const ActionBounds& bounds);

// ----------------------------------------------------------- short-term goals

enum class Comparison { Less, LessEqual, Greater, GreaterEqual };

/// `x[index] <cmp> threshold`, or `|x[index]| <cmp> threshold` when absolute.
struct StatePredicate {
  int index = 0;
  Comparison cmp = Comparison::GreaterEqual;
  double threshold = 0.0;
  bool absolute = false;

  [[nodiscard]] bool holds(const State& x) const;
};

/// Steps [start, end) during which a goal may be active; end < 0 means open.
struct StepWindow {
  int start = 0;
  int end = -1;

  [[nodiscard]] bool contains(int k) const { return k >= start && (end < 0 || k < end); }
};

struct TrajectoryGoal {
  StateTarget target;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  StatePredicate active;
  StepWindow window;
};

/// Keep |x^i| <= bound (two-sided) or a one-sided bound; the constraint
/// branch fires once the component passes `margin`.
struct ConstraintGoal {
  int index = 0;
  double bound = 0.0;
  bool two_sided = true;
  BoundSide side = BoundSide::Upper;
  double margin = 0.0;
  /// Also fire when the unconstrained action is predicted to carry the
  /// component past the margin on the next step.
  bool predictive = false;
  StepWindow window;

  /// The single active one-sided constraint for state x.
  [[nodiscard]] StateConstraint side_for(const State& x) const;
  [[nodiscard]] bool beyond_margin(double value) const;
};

using ShortTermGoal = std::variant<TrajectoryGoal, ConstraintGoal>;

void validate_goal(const ShortTermGoal& goal, int state_dim);

enum class Branch { LongTerm, Trajectory, Constraint };

[[nodiscard]] const char* branch_name(Branch b);

struct HybridDecision {
  SynthesizedAction action;
  Branch branch = Branch::LongTerm;
  std::optional<KktSolution> kkt;
};

/// Switches between the long-term pseudo-inverse policy and a goal-aware
/// synthesis based on the goal's activation predicate and time window.
class HybridController {
 public:
  HybridController(const QModel& q, const DynamicsModel& dyn, ActionBounds bounds,
                   std::optional<ShortTermGoal> goal = std::nullopt);

  [[nodiscard]] HybridDecision decide(const State& x, int k, std::mt19937_64& rng) const;

 private:
  const QModel* q_;
  const DynamicsModel* dyn_;
  ActionBounds bounds_;
  std::optional<ShortTermGoal> goal_;
};

/// The approximation layer: applies a short-term goal on top of the action
/// proposed by any external policy, using only the dynamics model.
class AdjustmentLayer {
 public:
  AdjustmentLayer(const DynamicsModel& dyn, ActionBounds bounds, std::optional<ShortTermGoal> goal);

  [[nodiscard]] HybridDecision adjust(const Action& u_nominal, const State& x, int k) const;

 private:
  const DynamicsModel* dyn_;
  ActionBounds bounds_;
  std::optional<ShortTermGoal> goal_;
};

}  // namespace llql
