#include "llql/cli.hpp"

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "llql/errors.hpp"
#include "llql/experiment.hpp"
#include "llql/log.hpp"

namespace llql {

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out = "out";
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "flat key = value config file");
  cmd->add_option("--set", c.overrides, "override one config key (key=value), repeatable");
  cmd->add_option("-o,--out", c.out, "output directory (LLQL_OUTPUT_DIR overrides)");
  cmd->add_flag("-v,--verbose", c.verbose, "progress messages on stderr");
}

Workspace make_workspace(const Common& c) {
  Workspace ws;
  if (!c.config.empty()) apply_config_file(ws.settings, c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_setting(ws.settings, kv.substr(0, eq), kv.substr(eq + 1));
  }
  ws.out_dir = resolve_output_dir(c.out);
  ws.cache_dir = ws.out_dir / "artifacts";
  if (c.verbose) set_log_level(LogLevel::Info);
  return ws;
}

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path)) throw ConfigError(std::string(what) + " '" + path + "' does not exist");
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("invalid sweep value '" + item + "'");
    }
  }
  return out;
}

void print_summary(const EvalReport& report) { std::cout << aggregates_to_csv(report.aggregates()); }

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Locally linear Q-learning: training, evaluation and short-term goal experiments"};
  app.require_subcommand(1);

  Common train_c, eval_c, adjust_c, compare_c, sweep_c;

  auto* train = app.add_subcommand("train", "train one model and write it with its log");
  add_common(train, train_c);
  std::string method = "llql", env_name, mod;
  std::uint64_t seed = 0;
  train->add_option("-m,--method", method, "llql or ddpg")->check(CLI::IsMember({"llql", "ddpg"}));
  train->add_option("-e,--env", env_name, "mountain_car or pendulum (default: config env)");
  train->add_option("-s,--seed", seed, "training seed");
  train->add_option("--mod", mod, "reward modification for ddpg (t1..t4, c1..c4)");

  auto* eval = app.add_subcommand("eval", "evaluate a model under an optional short-term goal");
  add_common(eval, eval_c);
  std::string model_path, goal_name;
  int runs = -1;
  eval->add_option("model", model_path, "model file")->required();
  eval->add_option("-g,--goal", goal_name, "goal preset (default: config goal)");
  eval->add_option("-e,--env", env_name, "environment (default: config env)");
  eval->add_option("-n,--runs", runs, "evaluation episodes (default: eval.runs)");

  auto* adjust = app.add_subcommand("adjust", "apply the adjustment layer to a pre-trained policy");
  add_common(adjust, adjust_c);
  std::string policy_spec, dyn_path;
  adjust->add_option("-p,--policy", policy_spec, "model file or exec:<command>")->required();
  adjust->add_option("-d,--dynamics", dyn_path, "model file holding the f and g networks")->required();
  adjust->add_option("-g,--goal", goal_name, "goal preset (default: config goal)");
  adjust->add_option("-e,--env", env_name, "environment (default: config env)");
  adjust->add_option("-n,--runs", runs, "evaluation episodes (default: eval.runs)");

  auto* cmp = app.add_subcommand("compare", "reproduce the comparison tables");
  add_common(cmp, compare_c);
  std::vector<std::string> tables;
  cmp->add_option("-t,--table", tables, "trajectory, constraint, pendulum-trajectory, pendulum-constraint (default all)");

  auto* sweep = app.add_subcommand("sweep", "steps to the goal versus a short-term goal value");
  add_common(sweep, sweep_c);
  std::string kind = "constraint", values_text;
  sweep->add_option("-k,--kind", kind, "trajectory or constraint")->check(CLI::IsMember({"trajectory", "constraint"}));
  sweep->add_option("--values", values_text, "comma-separated goal values")->required();
  sweep->add_option("-m,--model", model_path, "LLQL model (default: best of the configured seeds)");
  sweep->add_option("-n,--runs", runs, "episodes per value (default: eval.runs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) {
      Workspace ws = make_workspace(train_c);
      const std::string env = env_name.empty() ? ws.settings.env : env_name;
      TrainLog log;
      std::filesystem::path model;
      if (method == "llql") {
        if (!mod.empty()) throw ConfigError("--mod applies to ddpg only");
        const TrainedRun r = ensure_llql(ws, env, seed);
        log = r.log;
        model = r.model;
      } else {
        const TrainedRun r = ensure_ddpg(ws, env, mod, seed);
        log = r.log;
        model = r.model;
      }
      const std::string stem = log.method + "-" + env + "-seed" + std::to_string(seed);
      std::filesystem::create_directories(ws.out_dir);
      std::filesystem::copy_file(model, ws.out_dir / (stem + ".llql"),
                                 std::filesystem::copy_options::overwrite_existing);
      log.write_csv(ws.out_dir / (stem + ".csv"));
      std::cout << (ws.out_dir / (stem + ".llql")).string() << '\n';
      return kExitOk;
    }
    if (eval->parsed() || adjust->parsed()) {
      const bool is_eval = eval->parsed();
      Workspace ws = make_workspace(is_eval ? eval_c : adjust_c);
      const std::string env = env_name.empty() ? ws.settings.env : env_name;
      const GoalSettings goal = goal_name.empty() ? ws.settings.goal : goal_preset(goal_name);
      const int n = runs >= 0 ? runs : ws.settings.eval_runs;
      EvalReport report;
      report.name = is_eval ? "eval" : "adjust";
      report.metadata["env"] = make_workspace_env(ws, env)->spec().to_json();
      report.metadata["settings"] = dump_settings(ws.settings);
      if (is_eval) {
        require_file(model_path, "model file");
        const ModelBundle b = load_bundle(model_path);
        const std::uint64_t s = b.metadata.value("seed", std::uint64_t{0});
        if (b.metadata.value("role", "") == "llql") {
          report.rows = evaluate_llql(ws, env, model_path, goal, "llql", s, n);
        } else {
          report.rows = evaluate_policy(ws, env, model_path, std::nullopt, goal, b.metadata.value("role", "policy"),
                                        s, n);
        }
      } else {
        if (!policy_spec.starts_with("exec:")) require_file(policy_spec, "policy file");
        require_file(dyn_path, "dynamics model file");
        report.rows = evaluate_policy(ws, env, policy_spec, std::nullopt, goal, "policy", 0, n);
        const auto adj = evaluate_policy(ws, env, policy_spec, dyn_path, goal, "policy+adjustment", 0, n);
        report.rows.insert(report.rows.end(), adj.begin(), adj.end());
      }
      write_report(report, ws.out_dir);
      print_summary(report);
      return kExitOk;
    }
    if (cmp->parsed()) {
      Workspace ws = make_workspace(compare_c);
      if (tables.empty()) tables = {"trajectory", "constraint", "pendulum-trajectory", "pendulum-constraint"};
      for (const auto& t : tables) (void)parse_table(t);
      for (const auto& t : tables) {
        const CompareResult r = compare(ws, parse_table(t));
        const auto dir = ws.out_dir / t;
        write_report(r.report, dir);
        write_text(dir / "curves.csv", curves_to_csv(r.logs, 5));
        std::cout << "# " << t << '\n';
        print_summary(r.report);
      }
      return kExitOk;
    }
    if (sweep->parsed()) {
      Workspace ws = make_workspace(sweep_c);
      const auto values = parse_values(values_text);
      std::filesystem::path model = model_path;
      if (model.empty()) {
        const auto trained = ensure_llql_seeds(ws, "mountain_car", ws.settings.seeds);
        model = select_best(ws, "mountain_car", trained).model;
      } else {
        require_file(model_path, "model file");
      }
      const auto rows = sweep_short_term(ws, model, kind == "trajectory" ? SweepKind::Trajectory : SweepKind::Constraint,
                                         values, runs >= 0 ? runs : ws.settings.eval_runs);
      const std::string csv = sweep_to_csv(rows);
      write_text(ws.out_dir / "sweep.csv", csv);
      std::cout << csv;
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace llql
