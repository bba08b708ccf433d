#include "llql/controller.hpp"

#include <cmath>
#include <string>

#include "llql/errors.hpp"
#include "llql/log.hpp"
#include "llql/lstsq.hpp"

namespace llql {

namespace {

Action uniform_action(const ActionBounds& bounds, std::mt19937_64& rng) {
  Action u(bounds.dim());
  for (int i = 0; i < bounds.dim(); ++i) {
    std::uniform_real_distribution<double> dist(bounds.low(i), bounds.high(i));
    u(i) = dist(rng);
  }
  return u;
}

SynthesizedAction finish(Action u, const ActionBounds& bounds) {
  SynthesizedAction s;
  s.clipped = bounds.clip(u);
  s.unclipped = std::move(u);
  return s;
}

void check_weights(double gamma1, double gamma2, bool allow_zero_gamma2) {
  if (!(gamma1 > 0.0) || !std::isfinite(gamma1)) throw InvalidInput("gamma1 must be positive");
  if (!std::isfinite(gamma2) || gamma2 < 0.0 || (!allow_zero_gamma2 && gamma2 == 0.0)) {
    throw InvalidInput("gamma2 must be positive");
  }
}

// Selected rows of the tracking residual x_d - x - delta (f + g u), written as
// A u - b with A = -gamma2 delta g_S and b = gamma2 (x_S + delta f_S - x_d_S).
void tracking_rows(const LocalDynamics& dyn, const State& x, const StateTarget& target, double gamma2, Mat& a,
                   Vec& b) {
  const int sd = static_cast<int>(x.size());
  if (dyn.f.size() != sd || dyn.g.rows() != sd) throw DimensionMismatch("dynamics do not match state dimension");
  const auto idx = target.resolved_indices(sd);
  if (static_cast<Eigen::Index>(idx.size()) != target.values.size()) {
    throw DimensionMismatch("trajectory target values do not match its index list");
  }
  if (!target.values.allFinite()) throw InvalidInput("trajectory target is not finite");
  a.resize(static_cast<Eigen::Index>(idx.size()), dyn.g.cols());
  b.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const int i = idx[r];
    const auto row = static_cast<Eigen::Index>(r);
    a.row(row) = -gamma2 * dyn.delta * dyn.g.row(i);
    b(row) = gamma2 * (x(i) + dyn.delta * dyn.f(i) - target.values(row));
  }
}

// Constraint in "upper" form: a u <= rhs_c with offset = x^i + delta f^i.
struct UpperForm {
  Eigen::RowVectorXd a;
  double offset = 0.0;
  double bound = 0.0;
  double sign = 1.0;
};

UpperForm upper_form(const LocalDynamics& dyn, const State& x, const StateConstraint& c) {
  const int sd = static_cast<int>(x.size());
  if (c.index < 0 || c.index >= sd) throw InvalidInput("constraint state index out of range");
  if (dyn.f.size() != sd || dyn.g.rows() != sd) throw DimensionMismatch("dynamics do not match state dimension");
  if (!std::isfinite(c.bound)) throw InvalidInput("constraint bound is not finite");
  // Lower bounds x >= c become -x <= -c.
  const double s = c.side == BoundSide::Upper ? 1.0 : -1.0;
  UpperForm u;
  u.sign = s;
  u.a = s * dyn.delta * dyn.g.row(c.index);
  u.offset = s * (x(c.index) + dyn.delta * dyn.f(c.index));
  u.bound = s * c.bound;
  return u;
}

void record_prediction(KktSolution& sol, const UpperForm& form, const ActionBounds& bounds) {
  sol.clipped = bounds.clip(sol.u);
  const double pred = form.offset + form.a.dot(sol.u);
  const double pred_clipped = form.offset + form.a.dot(sol.clipped);
  sol.predicted = form.sign * pred;
  sol.predicted_clipped = form.sign * pred_clipped;
  sol.clipping_violates = pred <= form.bound && pred_clipped > form.bound + 1e-12;
  if (sol.clipping_violates) {
    log(LogLevel::Debug, "clipping the constrained action breaks the predicted constraint (" +
                             std::to_string(sol.predicted_clipped) + " vs bound " +
                             std::to_string(form.sign * form.bound) + ")");
  }
}

}  // namespace

std::vector<int> StateTarget::resolved_indices(int state_dim) const {
  if (indices.empty()) {
    std::vector<int> all(static_cast<std::size_t>(state_dim));
    for (int i = 0; i < state_dim; ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  for (int i : indices) {
    if (i < 0 || i >= state_dim) throw InvalidInput("trajectory target index out of range");
  }
  return indices;
}

// ----------------------------------------------------------------- long term

SynthesizedAction long_term_action(const LocalAdvantage& adv, const ActionBounds& bounds, std::mt19937_64& rng) {
  if (adv.d.cols() != bounds.dim()) throw DimensionMismatch("d columns do not match the action dimension");
  if (auto u = pseudo_inverse_action(adv.d, adv.h)) return finish(std::move(*u), bounds);
  SynthesizedAction s = finish(uniform_action(bounds, rng), bounds);
  s.random_fallback = true;
  return s;
}

SynthesizedAction long_term_action(const QModel& q, const State& x, const ActionBounds& bounds,
                                   std::mt19937_64& rng) {
  return long_term_action(q.local(x), bounds, rng);
}

// ---------------------------------------------------------------- trajectory

SynthesizedAction trajectory_action(const LocalAdvantage& adv, const LocalDynamics& dyn, const State& x,
                                    const StateTarget& target, double gamma1, double gamma2,
                                    const ActionBounds& bounds, std::mt19937_64& rng) {
  check_weights(gamma1, gamma2, false);
  Mat track_a;
  Vec track_b;
  tracking_rows(dyn, x, target, gamma2, track_a, track_b);
  const auto m = adv.d.rows();
  const auto n = adv.d.cols();
  if (track_a.cols() != n) throw DimensionMismatch("g and d have different action dimensions");
  Mat a(m + track_a.rows(), n);
  Vec b(m + track_b.size());
  a << gamma1 * adv.d, track_a;
  b << -gamma1 * adv.h, track_b;
  if (auto u = ridge_least_squares(a, b)) return finish(std::move(*u), bounds);
  log_warning("trajectory least-squares system is singular; falling back to the long-term action");
  SynthesizedAction s = long_term_action(adv, bounds, rng);
  s.solve_fallback = true;
  return s;
}

SynthesizedAction trajectory_action(const QModel& q, const DynamicsModel& dyn, const State& x,
                                    const StateTarget& target, double gamma1, double gamma2,
                                    const ActionBounds& bounds, std::mt19937_64& rng) {
  return trajectory_action(q.local(x), dyn.local(x), x, target, gamma1, gamma2, bounds, rng);
}

SynthesizedAction approx_trajectory_action(const Action& u_nominal, const LocalDynamics& dyn, const State& x,
                                           const StateTarget& target, double gamma1, double gamma2,
                                           const ActionBounds& bounds) {
  check_weights(gamma1, gamma2, true);
  if (!u_nominal.allFinite()) throw InvalidInput("nominal action is not finite");
  if (u_nominal.size() != dyn.g.cols()) throw DimensionMismatch("nominal action dimension mismatch");
  if (gamma2 == 0.0) return finish(u_nominal, bounds);
  Mat track_a;
  Vec track_b;
  tracking_rows(dyn, x, target, gamma2, track_a, track_b);
  const auto n = u_nominal.size();
  Mat a(n + track_a.rows(), n);
  Vec b(n + track_b.size());
  a << gamma1 * Mat::Identity(n, n), track_a;
  b << gamma1 * u_nominal, track_b;
  if (auto u = ridge_least_squares(a, b)) return finish(std::move(*u), bounds);
  log_warning("approximate trajectory system is singular; keeping the nominal action");
  SynthesizedAction s = finish(u_nominal, bounds);
  s.solve_fallback = true;
  return s;
}

SynthesizedAction approx_trajectory_action(const Action& u_nominal, const DynamicsModel& dyn, const State& x,
                                           const StateTarget& target, double gamma1, double gamma2,
                                           const ActionBounds& bounds) {
  return approx_trajectory_action(u_nominal, dyn.local(x), x, target, gamma1, gamma2, bounds);
}

// ---------------------------------------------------------------- constraint

KktSolution constraint_action(const LocalAdvantage& adv, const LocalDynamics& dyn, const State& x,
                              const StateConstraint& constraint, const ActionBounds& bounds) {
  const Mat& d = adv.d;
  if (d.norm() < kEpsD) throw InvalidInput("constraint_action requires ||d|| >= eps_d");
  if (dyn.g.cols() != d.cols()) throw DimensionMismatch("g and d have different action dimensions");
  const UpperForm form = upper_form(dyn, x, constraint);

  // With M = d^T d + rho I:
  //   alpha2 = a M^{-1} d^T,  alpha1 = a d^T (d d^T + rho I)^{-1},
  //   lambda = (x^i + delta f^i - c - alpha2 h) / (a M^{-1} a^T),
  //   u = -M^{-1} (d^T h + lambda a^T).
  // For square invertible d, alpha1 = alpha2 = a d^{-1} and the denominator
  // equals alpha1 . alpha2.
  const Mat at = form.a.transpose();
  Mat rhs(d.cols(), 2);
  rhs.col(0) = d.transpose() * adv.h;
  rhs.col(1) = at;
  const auto solved = ridge_normal_solve(d, rhs);
  if (!solved) throw InvalidInput("constraint_action: d^T d is numerically singular");
  const Vec minv_dth = solved->col(0);
  const Vec minv_at = solved->col(1);
  const double curvature = form.a.dot(minv_at);
  if (!(std::abs(curvature) >= kEpsKkt)) {
    throw UncontrollableConstraint("the action cannot influence state component " +
                                   std::to_string(constraint.index) + " (curvature " + std::to_string(curvature) +
                                   ")");
  }
  Mat ddt = d * d.transpose();
  ddt.diagonal().array() += kRidge;
  const Eigen::RowVectorXd alpha1_vec = (ddt.ldlt().solve(d * at)).transpose();
  const Eigen::RowVectorXd alpha2_vec = minv_at.transpose() * d.transpose();

  KktSolution sol;
  const double a2h = alpha2_vec.dot(adv.h);
  const double lambda = (form.offset - form.bound - a2h) / curvature;
  // Scalars for a single action; otherwise report their magnitudes.
  sol.alpha1 = alpha1_vec.size() == 1 ? alpha1_vec(0) : alpha1_vec.norm();
  sol.alpha2 = alpha2_vec.size() == 1 ? alpha2_vec(0) : alpha2_vec.norm();
  if (lambda <= 0.0) {
    // Complementary slackness: the unconstrained optimum is feasible.
    sol.lambda = 0.0;
    sol.u = -minv_dth;
  } else {
    sol.lambda = lambda;
    sol.u = -(minv_dth + lambda * minv_at);
  }
  record_prediction(sol, form, bounds);
  return sol;
}

KktSolution constraint_action(const QModel& q, const DynamicsModel& dyn, const State& x,
                              const StateConstraint& constraint, const ActionBounds& bounds) {
  return constraint_action(q.local(x), dyn.local(x), x, constraint, bounds);
}

KktSolution approx_constraint_action(const Action& u_nominal, const LocalDynamics& dyn, const State& x,
                                     const StateConstraint& constraint, const ActionBounds& bounds) {
  if (!u_nominal.allFinite()) throw InvalidInput("nominal action is not finite");
  if (u_nominal.size() != dyn.g.cols()) throw DimensionMismatch("nominal action dimension mismatch");
  const UpperForm form = upper_form(dyn, x, constraint);
  const double norm2 = form.a.squaredNorm();
  if (!(norm2 >= kEpsKkt)) {
    throw UncontrollableConstraint("the action cannot influence state component " +
                                   std::to_string(constraint.index));
  }
  KktSolution sol;
  sol.alpha1 = std::sqrt(norm2);
  sol.alpha2 = sol.alpha1;
  const double lambda = (form.offset - form.bound + form.a.dot(u_nominal)) / norm2;
  if (lambda <= 0.0) {
    sol.lambda = 0.0;
    sol.u = u_nominal;
  } else {
    sol.lambda = lambda;
    sol.u = u_nominal - lambda * form.a.transpose();
  }
  record_prediction(sol, form, bounds);
  return sol;
}

KktSolution approx_constraint_action(const Action& u_nominal, const DynamicsModel& dyn, const State& x,
                                     const StateConstraint& constraint, const ActionBounds& bounds) {
  return approx_constraint_action(u_nominal, dyn.local(x), x, constraint, bounds);
}

// --------------------------------------------------------------------- goals

bool StatePredicate::holds(const State& x) const {
  if (index < 0 || index >= x.size()) throw InvalidInput("predicate state index out of range");
  const double v = absolute ? std::abs(x(index)) : x(index);
  switch (cmp) {
    case Comparison::Less: return v < threshold;
    case Comparison::LessEqual: return v <= threshold;
    case Comparison::Greater: return v > threshold;
    case Comparison::GreaterEqual: return v >= threshold;
  }
  return false;
}

StateConstraint ConstraintGoal::side_for(const State& x) const {
  if (!two_sided) return {index, bound, side};
  // Nearer side of |x^i| <= bound.
  if (x(index) >= 0.0) return {index, bound, BoundSide::Upper};
  return {index, -bound, BoundSide::Lower};
}

bool ConstraintGoal::beyond_margin(double value) const {
  if (two_sided) return std::abs(value) > margin;
  return side == BoundSide::Upper ? value > margin : value < margin;
}

void validate_goal(const ShortTermGoal& goal, int state_dim) {
  if (const auto* t = std::get_if<TrajectoryGoal>(&goal)) {
    if (!(t->gamma1 > 0.0) || !(t->gamma2 > 0.0)) throw InvalidInput("trajectory weights must be positive");
    const auto idx = t->target.resolved_indices(state_dim);
    if (static_cast<Eigen::Index>(idx.size()) != t->target.values.size()) {
      throw InvalidInput("trajectory target values do not match its index list");
    }
    if (t->active.index < 0 || t->active.index >= state_dim) throw InvalidInput("activation index out of range");
  } else {
    const auto& c = std::get<ConstraintGoal>(goal);
    if (c.index < 0 || c.index >= state_dim) throw InvalidInput("constraint state index out of range");
    if (c.two_sided && !(c.bound > 0.0)) throw InvalidInput("two-sided constraint bound must be positive");
  }
}

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::LongTerm: return "long_term";
    case Branch::Trajectory: return "trajectory";
    case Branch::Constraint: return "constraint";
  }
  return "";
}

HybridController::HybridController(const QModel& q, const DynamicsModel& dyn, ActionBounds bounds,
                                   std::optional<ShortTermGoal> goal)
    : q_(&q), dyn_(&dyn), bounds_(std::move(bounds)), goal_(std::move(goal)) {
  if (goal_) validate_goal(*goal_, q.state_dim());
}

HybridDecision HybridController::decide(const State& x, int k, std::mt19937_64& rng) const {
  HybridDecision out;
  const LocalAdvantage adv = q_->local(x);
  if (!goal_) {
    out.action = long_term_action(adv, bounds_, rng);
    return out;
  }
  if (const auto* t = std::get_if<TrajectoryGoal>(&*goal_)) {
    if (t->window.contains(k) && t->active.holds(x)) {
      out.branch = Branch::Trajectory;
      out.action = trajectory_action(adv, dyn_->local(x), x, t->target, t->gamma1, t->gamma2, bounds_, rng);
    } else {
      out.action = long_term_action(adv, bounds_, rng);
    }
    return out;
  }
  const auto& c = std::get<ConstraintGoal>(*goal_);
  SynthesizedAction base = long_term_action(adv, bounds_, rng);
  if (!c.window.contains(k)) {
    out.action = std::move(base);
    return out;
  }
  bool active = c.beyond_margin(x(c.index));
  std::optional<LocalDynamics> ld;
  if (!active && c.predictive) {
    ld = dyn_->local(x);
    const Vec next = x + ld->delta * (ld->f + ld->g * base.clipped);
    active = c.beyond_margin(next(c.index));
  }
  if (!active) {
    out.action = std::move(base);
    return out;
  }
  if (!ld) ld = dyn_->local(x);
  out.branch = Branch::Constraint;
  const StateConstraint sc = c.side_for(x);
  KktSolution sol = base.random_fallback ? approx_constraint_action(base.unclipped, *ld, x, sc, bounds_)
                                         : constraint_action(adv, *ld, x, sc, bounds_);
  out.action.unclipped = sol.u;
  out.action.clipped = sol.clipped;
  out.action.random_fallback = base.random_fallback;
  out.kkt = std::move(sol);
  return out;
}

AdjustmentLayer::AdjustmentLayer(const DynamicsModel& dyn, ActionBounds bounds, std::optional<ShortTermGoal> goal)
    : dyn_(&dyn), bounds_(std::move(bounds)), goal_(std::move(goal)) {
  if (goal_) validate_goal(*goal_, dyn.state_dim());
}

HybridDecision AdjustmentLayer::adjust(const Action& u_nominal, const State& x, int k) const {
  HybridDecision out;
  out.action.unclipped = u_nominal;
  out.action.clipped = bounds_.clip(u_nominal);
  if (!goal_) return out;
  if (const auto* t = std::get_if<TrajectoryGoal>(&*goal_)) {
    if (t->window.contains(k) && t->active.holds(x)) {
      out.branch = Branch::Trajectory;
      out.action = approx_trajectory_action(u_nominal, *dyn_, x, t->target, t->gamma1, t->gamma2, bounds_);
    }
    return out;
  }
  const auto& c = std::get<ConstraintGoal>(*goal_);
  if (!c.window.contains(k)) return out;
  const LocalDynamics ld = dyn_->local(x);
  bool active = c.beyond_margin(x(c.index));
  if (!active && c.predictive) {
    const Vec next = x + ld.delta * (ld.f + ld.g * out.action.clipped);
    active = c.beyond_margin(next(c.index));
  }
  if (!active) return out;
  out.branch = Branch::Constraint;
  KktSolution sol = approx_constraint_action(u_nominal, ld, x, c.side_for(x), bounds_);
  out.action.unclipped = sol.u;
  out.action.clipped = sol.clipped;
  out.kkt = std::move(sol);
  return out;
}

}  // namespace llql
