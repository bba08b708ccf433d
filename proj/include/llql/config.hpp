#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llql/controller.hpp"
#include "llql/ddpg.hpp"
#include "llql/evaluation.hpp"
#include "llql/mpc.hpp"
#include "llql/reward_mods.hpp"
#include "llql/trainer.hpp"

namespace llql {

enum class GoalKind { None, Trajectory, Constraint };

/// Declarative short-term goal plus the metric it is scored by.
struct GoalSettings {
  GoalKind kind = GoalKind::None;
  /// State component tracked (trajectory) or bounded (constraint).
  int index = 1;
  /// Desired next value of the tracked component.
  double value = 0.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  /// Trajectory activation predicate x[active_index] <cmp> active_threshold.
  int active_index = 0;
  Comparison active_cmp = Comparison::GreaterEqual;
  double active_threshold = 0.0;
  bool active_abs = false;
  double bound = 0.0;
  double margin = 0.0;
  bool two_sided = true;
  BoundSide side = BoundSide::Upper;
  bool predictive = false;
  int window_start = 0;
  int window_end = -1;
  /// Threshold of the s_out hazard count; 0 disables it.
  double hazard = 0.0;
  TrackingMode tracking = TrackingMode::AtGoal;
};

/// Named goal presets: "none", "mc-trajectory", "mc-constraint",
/// "pendulum-trajectory", "pendulum-constraint".
[[nodiscard]] GoalSettings goal_preset(const std::string& name);
[[nodiscard]] std::optional<ShortTermGoal> build_goal(const GoalSettings& g);
[[nodiscard]] MetricSpec build_metrics(const GoalSettings& g);

/// Everything a run can be configured with.
struct Settings {
  std::string env = "mountain_car";
  double goal_position = 0.45;
  TrainConfig llql;
  DdpgConfig ddpg;
  MpcConfig mpc;
  RewardModParams mods;
  /// Pendulum runs (the adjustment experiments) use their own trainers.
  TrainConfig pendulum_llql;
  DdpgConfig pendulum_ddpg;
  GoalSettings goal;
  std::vector<std::uint64_t> seeds = {0};
  int eval_runs = 10;
  std::uint64_t eval_seed = 1000;
  /// Worker threads; 0 uses the hardware concurrency.
  int jobs = 0;

  Settings();
};

/// Applies one key=value assignment. Throws ConfigError naming the key on
/// unknown keys or unparsable values.
void set_setting(Settings& s, const std::string& key, const std::string& value);

/// Parses the flat config format: one `key = value` per line, `#` starts a
/// comment, blank lines ignored. Later assignments win.
void apply_config_text(Settings& s, const std::string& text);

/// Reads and applies a config file. Throws ConfigError naming a missing path.
void apply_config_file(Settings& s, const std::filesystem::path& path);

/// (key, description) for every accepted key, in documentation order.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> settings_schema();

/// Canonical `key = value` dump of every setting; parsing it reproduces `s`.
[[nodiscard]] std::string dump_settings(const Settings& s);

}  // namespace llql
