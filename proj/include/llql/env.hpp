#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "llql/types.hpp"

namespace llql {

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  int horizon = 1;
  /// Mountain car goal position; unused by the pendulum.
  double goal_position = 0.0;
  Vec state_low;
  Vec state_high;
  ActionBounds action_bounds;
  std::map<std::string, double> constants;

  [[nodiscard]] nlohmann::json to_json() const;
};

struct StepResult {
  State next_state;
  double reward = 0.0;
  /// Goal reached or horizon hit.
  bool done = false;
  /// Goal predicate holds for next_state (a true terminal, not a truncation).
  bool goal = false;
  /// 1-based index of the step just taken.
  int step = 0;
};

/// Stateless environment: every call is a pure function of its arguments,
/// so one instance can be shared by concurrent rollouts.
class Environment {
 public:
  virtual ~Environment() = default;

  [[nodiscard]] virtual const EnvSpec& spec() const = 0;
  [[nodiscard]] virtual State reset(std::uint64_t seed) const = 0;
  /// Advances `state` by one step. `step_index` is the 1-based index of the
  /// step being taken and drives horizon truncation. Actions are clipped.
  [[nodiscard]] virtual StepResult step(const State& state, const Action& action,
                                        int step_index) const = 0;
  [[nodiscard]] virtual bool goal_reached(const State& state) const = 0;
  /// True iff every component lies within its declared bounds.
  [[nodiscard]] virtual bool valid_state(const State& state) const;
};

class MountainCar final : public Environment {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kPower = 0.0015;
  static constexpr double kGravity = 0.0025;
  static constexpr double kDefaultGoal = 0.45;

  explicit MountainCar(double goal_position = kDefaultGoal, int horizon = 1000);

  const EnvSpec& spec() const override { return spec_; }
  State reset(std::uint64_t seed) const override;
  StepResult step(const State& state, const Action& action, int step_index) const override;
  bool goal_reached(const State& state) const override;

 private:
  EnvSpec spec_;
};

class Pendulum final : public Environment {
 public:
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kDt = 0.05;
  static constexpr double kG = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;

  explicit Pendulum(int horizon = 200);

  const EnvSpec& spec() const override { return spec_; }
  State reset(std::uint64_t seed) const override;
  StepResult step(const State& state, const Action& action, int step_index) const override;
  bool goal_reached(const State& state) const override;
  bool valid_state(const State& state) const override;

  [[nodiscard]] static State observe(double theta, double theta_dot);
  [[nodiscard]] static double angle(const State& state);

 private:
  EnvSpec spec_;
};

/// Wraps an angle to (-pi, pi].
[[nodiscard]] double wrap_angle(double theta);

/// Builds "mountain_car" or "pendulum". Throws ConfigError for other names.
[[nodiscard]] std::unique_ptr<Environment> make_env(const std::string& name,
                                                    double goal_position = MountainCar::kDefaultGoal);

}  // namespace llql
