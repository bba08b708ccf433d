#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "llql/config.hpp"
#include "llql/report.hpp"

namespace llql {

/// Where a run reads its configuration and writes artifacts.
struct Workspace {
  Settings settings;
  /// Reports land here.
  std::filesystem::path out_dir = "out";
  /// Trained models and logs, keyed by configuration; reused when present.
  std::filesystem::path cache_dir = "out/artifacts";
};

/// `requested`, unless the LLQL_OUTPUT_DIR environment variable is set.
[[nodiscard]] std::filesystem::path resolve_output_dir(const std::filesystem::path& requested);

/// Runs fn(0..n-1) on up to `jobs` threads (0 = hardware concurrency).
/// Results must not depend on scheduling; the first exception by index is rethrown.
void parallel_for(int jobs, std::size_t n, const std::function<void(std::size_t)>& fn);

/// A trained model on disk plus its training log.
struct TrainedRun {
  std::uint64_t seed = 0;
  std::filesystem::path model;
  TrainLog log;
};

/// LLQL model for (env, seed) under the workspace's trainer settings,
/// trained on first use and cached.
[[nodiscard]] TrainedRun ensure_llql(const Workspace& ws, const std::string& env, std::uint64_t seed);
[[nodiscard]] std::vector<TrainedRun> ensure_llql_seeds(const Workspace& ws, const std::string& env,
                                                        const std::vector<std::uint64_t>& seeds);
/// DDPG model trained with reward modification `mod` ("" for none).
[[nodiscard]] TrainedRun ensure_ddpg(const Workspace& ws, const std::string& env, const std::string& mod,
                                     std::uint64_t seed);

[[nodiscard]] std::unique_ptr<Environment> make_workspace_env(const Workspace& ws, const std::string& env);

/// Reset seed of evaluation run r; shared by every method so they start alike.
[[nodiscard]] std::uint64_t eval_reset_seed(const Workspace& ws, int run);

/// Evaluates an LLQL model under the hybrid controller for `goal`.
[[nodiscard]] std::vector<EvalRow> evaluate_llql(const Workspace& ws, const std::string& env,
                                                 const std::filesystem::path& model, const GoalSettings& goal,
                                                 const std::string& label, std::uint64_t seed, int runs);

/// Evaluates any policy, optionally followed by the adjustment layer built
/// from the dynamics model in `dynamics_model`.
[[nodiscard]] std::vector<EvalRow> evaluate_policy(const Workspace& ws, const std::string& env,
                                                   const std::string& policy_spec,
                                                   const std::optional<std::filesystem::path>& dynamics_model,
                                                   const GoalSettings& goal, const std::string& label,
                                                   std::uint64_t seed, int runs);

/// Random-shooting MPC over the dynamics of `dynamics_model`. Run r uses
/// reward modification mods[r % mods.size()] (none when `mods` is empty).
[[nodiscard]] std::vector<EvalRow> evaluate_mpc(const Workspace& ws, const std::filesystem::path& dynamics_model,
                                                const std::vector<std::string>& mods, const GoalSettings& goal,
                                                const std::string& label, int runs);

/// The trained run whose model does best without a short-term goal
/// (most successes, then fewest mean steps, then highest reward, then lowest seed).
[[nodiscard]] const TrainedRun& select_best(const Workspace& ws, const std::string& env,
                                            const std::vector<TrainedRun>& runs);

enum class Table { Trajectory, Constraint, PendulumTrajectory, PendulumConstraint };

[[nodiscard]] Table parse_table(const std::string& name);
[[nodiscard]] const char* table_name(Table t);

struct CompareResult {
  EvalReport report;
  /// Training logs of every model trained for the table.
  std::vector<TrainLog> logs;
};

/// Reproduces one comparison table: trains (or loads) every method involved
/// and evaluates each for eval.runs episodes.
[[nodiscard]] CompareResult compare(const Workspace& ws, Table table);

enum class SweepKind { Trajectory, Constraint };

/// Steps to the goal of an LLQL model for each short-term goal value:
/// desired arrival velocity (Trajectory) or speed limit (Constraint).
[[nodiscard]] std::vector<SweepRow> sweep_short_term(const Workspace& ws, const std::filesystem::path& model,
                                                     SweepKind kind, const std::vector<double>& values, int runs);

/// Mean absolute one-step prediction error per state component of an LLQL
/// model's dynamics along one episode of its own long-term policy.
[[nodiscard]] Vec one_step_error(const Workspace& ws, const std::string& env, const std::filesystem::path& model,
                                 int run);

}  // namespace llql
