#include "llql/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "llql/errors.hpp"
#include "llql/log.hpp"
#include "llql/mpc.hpp"
#include "llql/policy.hpp"
#include "llql/seeding.hpp"

namespace llql {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (int x : v) s += std::to_string(x) + ",";
  return s;
}

std::string describe(const TrainConfig& c) {
  std::ostringstream os;
  os << "llql|" << c.episodes << '|' << c.horizon << '|' << c.short_iterations << '|' << c.long_iterations << '|'
     << c.short_batch << '|' << c.long_batch << '|' << format_double(c.gamma) << '|' << format_double(c.tau) << '|'
     << format_double(c.delta) << '|' << format_double(c.noise_sigma0) << '|' << format_double(c.noise_decay) << '|'
     << format_double(c.noise_floor) << '|' << static_cast<int>(c.noise_kind) << '|' << format_double(c.noise_theta)
     << '|' << format_double(c.short_lr) << '|' << c.short_lr_switch_steps << '|' << format_double(c.short_lr_after)
     << '|' << format_double(c.long_lr) << '|' << c.buffer_capacity << '|' << c.normalizer_samples << '|'
     << join_ints(c.hidden) << '|' << c.squared_long_loss;
  return os.str();
}

std::string describe(const DdpgConfig& c) {
  std::ostringstream os;
  os << "ddpg|" << c.episodes << '|' << c.horizon << '|' << join_ints(c.hidden) << '|' << format_double(c.critic_lr)
     << '|' << format_double(c.actor_lr) << '|' << format_double(c.gamma) << '|' << c.batch << '|'
     << format_double(c.tau) << '|' << c.updates_per_step << '|' << format_double(c.noise_sigma0) << '|'
     << format_double(c.noise_decay) << '|' << format_double(c.noise_floor) << '|' << static_cast<int>(c.noise_kind)
     << '|' << format_double(c.noise_theta) << '|' << c.buffer_capacity << '|' << c.normalizer_samples;
  return os.str();
}

std::string describe(const RewardModParams& p) {
  return format_double(p.desired_velocity) + "|" + format_double(p.speed_threshold) + "|" +
         format_double(p.top_position) + "|" + (p.c4_replaces ? "1" : "0");
}

bool cached(const std::filesystem::path& model, const std::filesystem::path& log) {
  return std::filesystem::exists(model) && std::filesystem::exists(log);
}

/// Writes via a temporary name so an interrupted run never leaves a
/// half-written artifact behind.
void commit(const std::filesystem::path& tmp, const std::filesystem::path& final_path) {
  std::filesystem::rename(tmp, final_path);
}

std::filesystem::path tmp_name(const std::filesystem::path& p) { return p.string() + ".tmp"; }

const ActionBounds& bounds_of(const Environment& env) { return env.spec().action_bounds; }

EvalRow make_row(const std::string& label, std::uint64_t seed, int run, const EpisodeMetrics& m) {
  return {label, seed, run, m.steps, m.success, m.e_v, m.s_out, m.cumulative_reward};
}

GoalSettings table_goal(const Workspace& ws, const std::string& preset) {
  GoalSettings g = goal_preset(preset);
  if (ws.settings.goal.kind == g.kind) return ws.settings.goal;
  return g;
}

}  // namespace

std::filesystem::path resolve_output_dir(const std::filesystem::path& requested) {
  if (const char* env = std::getenv("LLQL_OUTPUT_DIR"); env && *env) return env;
  return requested;
}

void parallel_for(int jobs, std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::unique_ptr<Environment> make_workspace_env(const Workspace& ws, const std::string& env) {
  return make_env(env, ws.settings.goal_position);
}

TrainedRun ensure_llql(const Workspace& ws, const std::string& env_name, std::uint64_t seed) {
  const auto env = make_workspace_env(ws, env_name);
  TrainConfig cfg = env_name == "pendulum" ? ws.settings.pendulum_llql : ws.settings.llql;
  cfg.seed = seed;
  cfg.checkpoint_every = 0;
  const std::string key = env_name + "|" + format_double(ws.settings.goal_position) + "|" + describe(cfg);
  const auto dir = ws.cache_dir / ("llql-" + env_name + "-" + hex(fnv1a(key)));
  const auto model = dir / ("seed-" + std::to_string(seed) + ".llql");
  const auto log_path = dir / ("seed-" + std::to_string(seed) + ".csv");
  TrainedRun out{seed, model, {}};
  if (cached(model, log_path)) {
    out.log = TrainLog::read_csv(log_path);
  } else {
    std::filesystem::create_directories(dir);
    log_info("training llql on " + env_name + ", seed " + std::to_string(seed));
    TrainResult r = train_llql(*env, cfg, [&](const EpisodeRecord& e, const LlqlModel&) {
      log_info("llql " + env_name + " seed " + std::to_string(seed) + " episode " + std::to_string(e.episode) +
               " reward " + format_double(e.cumulative_reward) + " steps " + std::to_string(e.steps));
      return true;
    });
    nlohmann::json meta{{"env", env->spec().to_json()}, {"seed", seed}, {"role", "llql"}, {"config", key}};
    save_bundle(to_bundle(r.model, meta), tmp_name(model));
    r.log.write_csv(tmp_name(log_path));
    commit(tmp_name(model), model);
    commit(tmp_name(log_path), log_path);
    out.log = std::move(r.log);
  }
  out.log.method = "llql";
  out.log.seed = seed;
  return out;
}

std::vector<TrainedRun> ensure_llql_seeds(const Workspace& ws, const std::string& env,
                                          const std::vector<std::uint64_t>& seeds) {
  std::vector<TrainedRun> runs(seeds.size());
  parallel_for(ws.settings.jobs, seeds.size(), [&](std::size_t i) { runs[i] = ensure_llql(ws, env, seeds[i]); });
  return runs;
}

TrainedRun ensure_ddpg(const Workspace& ws, const std::string& env_name, const std::string& mod, std::uint64_t seed) {
  const auto env = make_workspace_env(ws, env_name);
  DdpgConfig cfg = env_name == "pendulum" ? ws.settings.pendulum_ddpg : ws.settings.ddpg;
  cfg.seed = seed;
  std::optional<RewardMod> rm;
  if (!mod.empty()) {
    if (env_name != "mountain_car") throw ConfigError("reward modifications apply to mountain_car only");
    rm = reward_mod(mod, ws.settings.mods);
  }
  const std::string key = env_name + "|" + format_double(ws.settings.goal_position) + "|" + describe(cfg) + "|" +
                          mod + "|" + (rm ? describe(ws.settings.mods) : "");
  const std::string label = mod.empty() ? "ddpg" : "ddpg+" + mod;
  const auto dir = ws.cache_dir / (label + "-" + env_name + "-" + hex(fnv1a(key)));
  const auto model = dir / ("seed-" + std::to_string(seed) + ".llql");
  const auto log_path = dir / ("seed-" + std::to_string(seed) + ".csv");
  TrainedRun out{seed, model, {}};
  if (cached(model, log_path)) {
    out.log = TrainLog::read_csv(log_path);
  } else {
    std::filesystem::create_directories(dir);
    log_info("training " + label + " on " + env_name + ", seed " + std::to_string(seed));
    DdpgResult r = train_ddpg(*env, cfg, rm, [&](const EpisodeRecord& e, const DdpgModel&) {
      log_info(label + " " + env_name + " seed " + std::to_string(seed) + " episode " + std::to_string(e.episode) +
               " reward " + format_double(e.cumulative_reward) + " steps " + std::to_string(e.steps));
      return true;
    });
    nlohmann::json meta{{"env", env->spec().to_json()}, {"seed", seed}, {"reward_mod", mod}, {"config", key}};
    save_bundle(to_bundle(r.model, meta), tmp_name(model));
    r.log.write_csv(tmp_name(log_path));
    commit(tmp_name(model), model);
    commit(tmp_name(log_path), log_path);
    out.log = std::move(r.log);
  }
  out.log.method = label;
  out.log.seed = seed;
  return out;
}

std::uint64_t eval_reset_seed(const Workspace& ws, int run) {
  return mix_seed(ws.settings.eval_seed, stream::kEval + 16 * static_cast<std::uint64_t>(run));
}

std::vector<EvalRow> evaluate_llql(const Workspace& ws, const std::string& env_name,
                                   const std::filesystem::path& model_path, const GoalSettings& goal,
                                   const std::string& label, std::uint64_t seed, int runs) {
  if (runs <= 0) return {};
  const auto env = make_workspace_env(ws, env_name);
  const LlqlModel model = llql_from_bundle(load_bundle(model_path));
  if (model.q.state_dim() != env->spec().state_dim || model.q.action_dim() != env->spec().action_dim) {
    throw DimensionMismatch("model '" + model_path.string() + "' does not match environment " + env_name);
  }
  const HybridController controller(model.q, model.dynamics, bounds_of(*env), build_goal(goal));
  const MetricSpec metrics = build_metrics(goal);
  std::vector<EvalRow> rows(static_cast<std::size_t>(runs));
  parallel_for(ws.settings.jobs, rows.size(), [&](std::size_t i) {
    const int run = static_cast<int>(i);
    std::mt19937_64 rng(mix_seed(eval_reset_seed(ws, run), stream::kPolicy));
    rows[i] = make_row(label, seed, run,
                       run_episode(*env, eval_reset_seed(ws, run), hybrid_actor(controller, rng), metrics));
  });
  return rows;
}

std::vector<EvalRow> evaluate_policy(const Workspace& ws, const std::string& env_name, const std::string& policy_spec,
                                     const std::optional<std::filesystem::path>& dynamics_model,
                                     const GoalSettings& goal, const std::string& label, std::uint64_t seed,
                                     int runs) {
  if (runs <= 0) return {};
  const auto env = make_workspace_env(ws, env_name);
  std::optional<DynamicsModel> dyn;
  if (dynamics_model) {
    dyn = dynamics_from_bundle(load_bundle(*dynamics_model));
    if (dyn->state_dim() != env->spec().state_dim || dyn->action_dim() != env->spec().action_dim) {
      throw DimensionMismatch("dynamics model '" + dynamics_model->string() + "' does not match environment " +
                              env_name);
    }
  }
  const MetricSpec metrics = build_metrics(goal);
  std::vector<EvalRow> rows(static_cast<std::size_t>(runs));
  // External processes are not assumed to be re-entrant: evaluate serially.
  const bool external = policy_spec.starts_with("exec:");
  parallel_for(external ? 1 : ws.settings.jobs, rows.size(), [&](std::size_t i) {
    const int run = static_cast<int>(i);
    auto policy = load_policy(policy_spec, bounds_of(*env), mix_seed(eval_reset_seed(ws, run), stream::kPolicy));
    const auto nominal = [&policy](const State& x) { return policy->act(x); };
    EpisodeMetrics m;
    if (dyn) {
      const AdjustmentLayer layer(*dyn, bounds_of(*env), build_goal(goal));
      m = run_episode(*env, eval_reset_seed(ws, run), adjusted_actor(nominal, layer), metrics);
    } else {
      m = run_episode(*env, eval_reset_seed(ws, run),
                      [&](const State& x, int) { return StepDecision{nominal(x), Branch::LongTerm}; }, metrics);
    }
    rows[i] = make_row(label, seed, run, m);
  });
  return rows;
}

std::vector<EvalRow> evaluate_mpc(const Workspace& ws, const std::filesystem::path& dynamics_model,
                                  const std::vector<std::string>& mods, const GoalSettings& goal,
                                  const std::string& label, int runs) {
  if (runs <= 0) return {};
  const auto env = make_workspace_env(ws, "mountain_car");
  const ModelBundle bundle = load_bundle(dynamics_model);
  const DynamicsModel dyn = dynamics_from_bundle(bundle);
  const std::uint64_t seed = bundle.metadata.value("seed", std::uint64_t{0});
  const MetricSpec metrics = build_metrics(goal);
  std::vector<EvalRow> rows(static_cast<std::size_t>(runs));
  parallel_for(ws.settings.jobs, rows.size(), [&](std::size_t i) {
    const int run = static_cast<int>(i);
    std::optional<RewardMod> mod;
    if (!mods.empty()) mod = reward_mod(mods[i % mods.size()], ws.settings.mods);
    MpcPlanner planner(dyn, bounds_of(*env), mountain_car_mpc_reward(env->spec().goal_position, mod),
                       ws.settings.mpc);
    std::mt19937_64 rng(mix_seed(eval_reset_seed(ws, run), stream::kPolicy));
    const EpisodeMetrics m = run_episode(
        *env, eval_reset_seed(ws, run),
        [&](const State& x, int) { return StepDecision{planner.act(x, rng), Branch::LongTerm}; }, metrics);
    rows[i] = make_row(label, seed, run, m);
    log_info(label + " run " + std::to_string(run) + (mod ? " (" + mod->id + ")" : std::string()) + ": steps " +
             std::to_string(m.steps));
  });
  return rows;
}

const TrainedRun& select_best(const Workspace& ws, const std::string& env, const std::vector<TrainedRun>& runs) {
  if (runs.empty()) throw ConfigError("no trained models to select from");
  std::vector<EvalAggregate> aggs(runs.size());
  parallel_for(ws.settings.jobs, runs.size(), [&](std::size_t i) {
    Workspace serial = ws;
    serial.settings.jobs = 1;
    const auto rows = evaluate_llql(serial, env, runs[i].model, goal_preset("none"), "llql", runs[i].seed,
                                    ws.settings.eval_runs);
    aggs[i] = aggregate("llql", rows);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const auto& a = aggs[i];
    const auto& b = aggs[best];
    const bool better =
        a.successes != b.successes     ? a.successes > b.successes
        : a.mean_steps != b.mean_steps ? a.mean_steps < b.mean_steps
        : a.mean_reward != b.mean_reward ? a.mean_reward > b.mean_reward
                                         : runs[i].seed < runs[best].seed;
    if (better) best = i;
  }
  return runs[best];
}

Table parse_table(const std::string& name) {
  if (name == "trajectory") return Table::Trajectory;
  if (name == "constraint") return Table::Constraint;
  if (name == "pendulum-trajectory") return Table::PendulumTrajectory;
  if (name == "pendulum-constraint") return Table::PendulumConstraint;
  throw ConfigError("unknown table '" + name +
                    "' (trajectory|constraint|pendulum-trajectory|pendulum-constraint)");
}

const char* table_name(Table t) {
  switch (t) {
    case Table::Trajectory: return "trajectory";
    case Table::Constraint: return "constraint";
    case Table::PendulumTrajectory: return "pendulum-trajectory";
    case Table::PendulumConstraint: return "pendulum-constraint";
  }
  return "";
}

CompareResult compare(const Workspace& ws, Table table) {
  const Settings& s = ws.settings;
  if (s.seeds.empty()) throw ConfigError("no seeds configured");
  CompareResult out;
  EvalReport& report = out.report;
  report.name = table_name(table);
  report.metadata["goal_position"] = s.goal_position;
  report.metadata["eval_runs"] = s.eval_runs;
  report.metadata["eval_seed"] = s.eval_seed;
  report.metadata["settings"] = dump_settings(s);
  const int runs = s.eval_runs;
  const std::uint64_t baseline_seed = s.seeds.front();

  if (table == Table::Trajectory || table == Table::Constraint) {
    const bool traj = table == Table::Trajectory;
    const GoalSettings goal = table_goal(ws, traj ? "mc-trajectory" : "mc-constraint");
    const std::vector<std::string> mods =
        traj ? std::vector<std::string>{"t1", "t2", "t3", "t4"} : std::vector<std::string>{"c1", "c2", "c3", "c4"};
    report.metadata["env"] = make_workspace_env(ws, "mountain_car")->spec().to_json();

    const auto llql_runs = ensure_llql_seeds(ws, "mountain_car", s.seeds);
    for (const auto& r : llql_runs) out.logs.push_back(r.log);
    const TrainedRun& best = select_best(ws, "mountain_car", llql_runs);
    report.metadata["llql_model_seed"] = best.seed;

    std::vector<TrainedRun> ddpg(mods.size());
    parallel_for(s.jobs, mods.size(),
                 [&](std::size_t i) { ddpg[i] = ensure_ddpg(ws, "mountain_car", mods[i], baseline_seed); });
    for (std::size_t i = 0; i < mods.size(); ++i) {
      out.logs.push_back(ddpg[i].log);
      const auto rows = evaluate_policy(ws, "mountain_car", ddpg[i].model.string(), std::nullopt, goal,
                                        "ddpg+" + mods[i], baseline_seed, runs);
      report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    }
    const auto mpc_rows = evaluate_mpc(ws, best.model, mods, goal, "mpc", runs);
    report.rows.insert(report.rows.end(), mpc_rows.begin(), mpc_rows.end());
    const auto llql_rows = evaluate_llql(ws, "mountain_car", best.model, goal, "llql", best.seed, runs);
    report.rows.insert(report.rows.end(), llql_rows.begin(), llql_rows.end());
    return out;
  }

  const GoalSettings goal =
      table_goal(ws, table == Table::PendulumTrajectory ? "pendulum-trajectory" : "pendulum-constraint");
  report.metadata["env"] = make_workspace_env(ws, "pendulum")->spec().to_json();
  report.metadata["subject_policies"] =
      "locally trained DDPG and LLQL policies stand in for externally pre-trained agents";
  const TrainedRun llql_p = ensure_llql(ws, "pendulum", baseline_seed);
  const TrainedRun ddpg_p = ensure_ddpg(ws, "pendulum", "", baseline_seed);
  out.logs.push_back(ddpg_p.log);
  out.logs.push_back(llql_p.log);
  for (const auto* subject : {&ddpg_p, &llql_p}) {
    const std::string name = subject == &ddpg_p ? "ddpg" : "llql";
    const auto plain =
        evaluate_policy(ws, "pendulum", subject->model.string(), std::nullopt, goal, name, baseline_seed, runs);
    const auto adjusted = evaluate_policy(ws, "pendulum", subject->model.string(), llql_p.model, goal,
                                          name + "+adjustment", baseline_seed, runs);
    report.rows.insert(report.rows.end(), plain.begin(), plain.end());
    report.rows.insert(report.rows.end(), adjusted.begin(), adjusted.end());
  }
  return out;
}

std::vector<SweepRow> sweep_short_term(const Workspace& ws, const std::filesystem::path& model, SweepKind kind,
                                       const std::vector<double>& values, int runs) {
  std::vector<SweepRow> out;
  for (double v : values) {
    GoalSettings g = goal_preset(kind == SweepKind::Trajectory ? "mc-trajectory" : "mc-constraint");
    if (kind == SweepKind::Trajectory) {
      g.value = v;
    } else {
      g.bound = v;
      g.margin = v;
      g.hazard = v;
    }
    const auto rows = evaluate_llql(ws, "mountain_car", model, g, "llql", 0, runs);
    const EvalAggregate a = aggregate("llql", rows);
    out.push_back({v, a.runs, a.successes, a.mean_steps, a.std_steps});
  }
  return out;
}

Vec one_step_error(const Workspace& ws, const std::string& env_name, const std::filesystem::path& model_path,
                   int run) {
  const auto env = make_workspace_env(ws, env_name);
  const LlqlModel model = llql_from_bundle(load_bundle(model_path));
  std::mt19937_64 rng(mix_seed(eval_reset_seed(ws, run), stream::kPolicy));
  const HybridController controller(model.q, model.dynamics, bounds_of(*env));
  std::vector<TraceRow> trace;
  (void)run_episode(*env, eval_reset_seed(ws, run), hybrid_actor(controller, rng), {}, 0, &trace);
  Vec err = Vec::Zero(env->spec().state_dim);
  for (const auto& row : trace) {
    const StepResult sr = env->step(row.x, row.u, row.step);
    err += (model.dynamics.predict_next(row.x, row.u) - sr.next_state).cwiseAbs();
  }
  if (!trace.empty()) err /= static_cast<double>(trace.size());
  return err;
}

}  // namespace llql
