#include "llql/env.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "llql/errors.hpp"

namespace llql {

nlohmann::json EnvSpec::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["state_dim"] = state_dim;
  j["action_dim"] = action_dim;
  j["horizon"] = horizon;
  j["goal_position"] = goal_position;
  j["constants"] = constants;
  return j;
}

bool Environment::valid_state(const State& state) const {
  const auto& s = spec();
  if (state.size() != s.state_dim || !state.allFinite()) return false;
  return ((state.array() >= s.state_low.array()) && (state.array() <= s.state_high.array())).all();
}

namespace {

Action checked_clip(const EnvSpec& spec, const Action& action) {
  if (action.size() != spec.action_dim) {
    throw DimensionMismatch("action has dimension " + std::to_string(action.size()) + ", expected " +
                            std::to_string(spec.action_dim));
  }
  if (!action.allFinite()) throw InvalidInput("non-finite action passed to " + spec.name);
  return spec.action_bounds.clip(action);
}

void check_state(const EnvSpec& spec, const State& state) {
  if (state.size() != spec.state_dim) {
    throw DimensionMismatch("state has dimension " + std::to_string(state.size()) + ", expected " +
                            std::to_string(spec.state_dim));
  }
}

}  // namespace

// ---------------------------------------------------------------- mountain car

MountainCar::MountainCar(double goal_position, int horizon) {
  if (horizon < 1) throw InvalidInput("horizon must be >= 1");
  spec_.name = "mountain_car";
  spec_.state_dim = 2;
  spec_.action_dim = 1;
  spec_.horizon = horizon;
  spec_.goal_position = goal_position;
  spec_.state_low = Vec{{kMinPosition, -kMaxSpeed}};
  spec_.state_high = Vec{{kMaxPosition, kMaxSpeed}};
  spec_.action_bounds = {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
  spec_.constants = {{"min_position", kMinPosition}, {"max_position", kMaxPosition},
                     {"max_speed", kMaxSpeed},       {"power", kPower},
                     {"gravity", kGravity},          {"goal_reward", 100.0},
                     {"action_cost", 0.1}};
}

State MountainCar::reset(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-0.6, -0.4);
  return State{{pos(rng), 0.0}};
}

StepResult MountainCar::step(const State& state, const Action& action, int step_index) const {
  check_state(spec_, state);
  const double u = checked_clip(spec_, action)(0);
  double p = state(0);
  double v = state(1);
  v += kPower * u - kGravity * std::cos(3.0 * p);
  v = std::clamp(v, -kMaxSpeed, kMaxSpeed);
  p += v;
  p = std::clamp(p, kMinPosition, kMaxPosition);
  if (p == kMinPosition && v < 0.0) v = 0.0;

  StepResult r;
  r.next_state = State{{p, v}};
  r.goal = p >= spec_.goal_position;
  r.reward = -0.1 * u * u + (r.goal ? 100.0 : 0.0);
  r.step = step_index;
  r.done = r.goal || step_index >= spec_.horizon;
  return r;
}

bool MountainCar::goal_reached(const State& state) const { return state(0) >= spec_.goal_position; }

// -------------------------------------------------------------------- pendulum

Pendulum::Pendulum(int horizon) {
  if (horizon < 1) throw InvalidInput("horizon must be >= 1");
  spec_.name = "pendulum";
  spec_.state_dim = 3;
  spec_.action_dim = 1;
  spec_.horizon = horizon;
  spec_.state_low = Vec{{-1.0, -1.0, -kMaxSpeed}};
  spec_.state_high = Vec{{1.0, 1.0, kMaxSpeed}};
  spec_.action_bounds = {Vec::Constant(1, -kMaxTorque), Vec::Constant(1, kMaxTorque)};
  spec_.constants = {{"dt", kDt},         {"g", kG},
                     {"m", kMass},        {"l", kLength},
                     {"max_speed", kMaxSpeed}, {"max_torque", kMaxTorque}};
}

State Pendulum::observe(double theta, double theta_dot) {
  return State{{std::cos(theta), std::sin(theta), theta_dot}};
}

double Pendulum::angle(const State& state) { return std::atan2(state(1), state(0)); }

State Pendulum::reset(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> th(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> thdot(-1.0, 1.0);
  const double theta = th(rng);
  return observe(theta, thdot(rng));
}

StepResult Pendulum::step(const State& state, const Action& action, int step_index) const {
  check_state(spec_, state);
  const double u = checked_clip(spec_, action)(0);
  const double theta = angle(state);
  const double theta_dot = state(2);

  const double wrapped = wrap_angle(theta);
  const double cost = wrapped * wrapped + 0.1 * theta_dot * theta_dot + 0.001 * u * u;

  const double accel = 3.0 * kG / (2.0 * kLength) * std::sin(theta) + 3.0 / (kMass * kLength * kLength) * u;
  const double new_theta_dot = std::clamp(theta_dot + accel * kDt, -kMaxSpeed, kMaxSpeed);
  const double new_theta = theta + new_theta_dot * kDt;

  StepResult r;
  r.next_state = observe(new_theta, new_theta_dot);
  r.reward = -cost;
  r.goal = false;
  r.step = step_index;
  r.done = step_index >= spec_.horizon;
  return r;
}

bool Pendulum::goal_reached(const State&) const { return false; }

bool Pendulum::valid_state(const State& state) const {
  if (!Environment::valid_state(state)) return false;
  return std::abs(state(0) * state(0) + state(1) * state(1) - 1.0) <= 1e-9;
}

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  w -= std::numbers::pi;
  // fmod maps +pi to -pi; the reward convention uses (-pi, pi].
  if (w == -std::numbers::pi) w = std::numbers::pi;
  return w;
}

std::unique_ptr<Environment> make_env(const std::string& name, double goal_position) {
  if (name == "mountain_car") return std::make_unique<MountainCar>(goal_position);
  if (name == "pendulum") return std::make_unique<Pendulum>();
  throw ConfigError("unknown environment '" + name + "' (expected mountain_car or pendulum)");
}

}  // namespace llql
