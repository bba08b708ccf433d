#include "llql/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "llql/errors.hpp"

namespace llql {

GoalSettings goal_preset(const std::string& name) {
  GoalSettings g;
  if (name == "none") return g;
  if (name == "mc-trajectory") {
    // Track the arrival velocity once the car is on the right-hand slope.
    g.kind = GoalKind::Trajectory;
    g.index = 1;
    g.value = 0.025;
    g.gamma1 = 1.0;
    g.gamma2 = 2000.0;
    g.active_index = 0;
    g.active_cmp = Comparison::GreaterEqual;
    g.active_threshold = 0.0;
    g.tracking = TrackingMode::AtGoal;
    return g;
  }
  if (name == "mc-constraint") {
    g.kind = GoalKind::Constraint;
    g.index = 1;
    g.bound = 0.033;
    g.margin = 0.033;
    g.two_sided = true;
    g.predictive = true;
    g.hazard = 0.035;
    return g;
  }
  if (name == "pendulum-trajectory") {
    // Hold the angular velocity at 0 while the pendulum is near upright.
    g.kind = GoalKind::Trajectory;
    g.index = 2;
    g.value = 0.0;
    g.gamma1 = 1.0;
    g.gamma2 = 2000.0;
    g.active_index = 0;
    g.active_cmp = Comparison::Greater;
    g.active_threshold = 0.99;
    g.tracking = TrackingMode::OverActive;
    return g;
  }
  if (name == "pendulum-constraint") {
    g.kind = GoalKind::Constraint;
    g.index = 2;
    g.bound = 5.5;
    g.margin = 5.5;
    g.two_sided = true;
    g.predictive = true;
    g.hazard = 6.0;
    return g;
  }
  throw ConfigError("unknown goal preset '" + name + "'");
}

std::optional<ShortTermGoal> build_goal(const GoalSettings& g) {
  switch (g.kind) {
    case GoalKind::None: return std::nullopt;
    case GoalKind::Trajectory: {
      TrajectoryGoal t;
      t.target.values = Vec::Constant(1, g.value);
      t.target.indices = {g.index};
      t.gamma1 = g.gamma1;
      t.gamma2 = g.gamma2;
      t.active = {g.active_index, g.active_cmp, g.active_threshold, g.active_abs};
      t.window = {g.window_start, g.window_end};
      return t;
    }
    case GoalKind::Constraint: {
      ConstraintGoal c;
      c.index = g.index;
      c.bound = g.bound;
      c.two_sided = g.two_sided;
      c.side = g.side;
      c.margin = g.margin;
      c.predictive = g.predictive;
      c.window = {g.window_start, g.window_end};
      return c;
    }
  }
  return std::nullopt;
}

MetricSpec build_metrics(const GoalSettings& g) {
  MetricSpec m;
  if (g.hazard > 0.0) m.hazard = HazardSpec{g.index, g.hazard};
  if (g.kind == GoalKind::Trajectory) {
    m.tracking = TrackingSpec{g.index, g.value, g.tracking, {g.active_index, g.active_cmp, g.active_threshold,
                                                              g.active_abs}};
  }
  return m;
}

Settings::Settings() {
  // The pendulum integrates with dt = 0.05 and never terminates.
  pendulum_llql.episodes = 100;
  pendulum_llql.delta = 0.05;
  pendulum_llql.gamma = 0.99;
  pendulum_ddpg.episodes = 100;
  pendulum_ddpg.critic_lr = 1e-3;
  pendulum_ddpg.actor_lr = 1e-4;
  pendulum_ddpg.batch = 64;
  pendulum_ddpg.tau = 0.005;
  pendulum_ddpg.noise_kind = NoiseKind::Gaussian;
  pendulum_ddpg.noise_sigma0 = 0.3;
  pendulum_ddpg.noise_decay = 1.0;
  pendulum_ddpg.noise_floor = 0.3;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + v + "' for key '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("invalid boolean '" + v + "' for key '" + key + "'");
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, sep);) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split(v, ',')) out.push_back(parse_number<int>(key, s));
  if (out.empty()) throw ConfigError("key '" + key + "' needs at least one value");
  return out;
}

/// "0,3,5" or inclusive ranges "0-19".
std::vector<std::uint64_t> parse_seeds(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& s : split(v, ',')) {
    const auto dash = s.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto a = parse_number<std::uint64_t>(key, trim(s.substr(0, dash)));
      const auto b = parse_number<std::uint64_t>(key, trim(s.substr(dash + 1)));
      if (b < a) throw ConfigError("empty seed range '" + s + "'");
      for (auto i = a; i <= b; ++i) out.push_back(i);
    } else {
      out.push_back(parse_number<std::uint64_t>(key, s));
    }
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

const char* noise_name(NoiseKind k) { return k == NoiseKind::Gaussian ? "gaussian" : "ou"; }

NoiseKind parse_noise(const std::string& key, const std::string& v) {
  if (v == "gaussian") return NoiseKind::Gaussian;
  if (v == "ou") return NoiseKind::OrnsteinUhlenbeck;
  throw ConfigError("invalid noise kind '" + v + "' for key '" + key + "' (gaussian|ou)");
}

const char* cmp_name(Comparison c) {
  switch (c) {
    case Comparison::Less: return "lt";
    case Comparison::LessEqual: return "le";
    case Comparison::Greater: return "gt";
    case Comparison::GreaterEqual: return "ge";
  }
  return "";
}

Comparison parse_cmp(const std::string& key, const std::string& v) {
  if (v == "lt") return Comparison::Less;
  if (v == "le") return Comparison::LessEqual;
  if (v == "gt") return Comparison::Greater;
  if (v == "ge") return Comparison::GreaterEqual;
  throw ConfigError("invalid comparison '" + v + "' for key '" + key + "' (lt|le|gt|ge)");
}

struct Field {
  std::string key;
  std::string description;
  std::function<void(Settings&, const std::string&, const std::string&)> set;
  std::function<std::string(const Settings&)> get;
};

template <typename T, typename Proj>
Field num(std::string key, std::string desc, Proj proj) {
  return {std::move(key), std::move(desc),
          [proj](Settings& s, const std::string& k, const std::string& v) { proj(s) = parse_number<T>(k, v); },
          [proj](const Settings& s) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(proj(const_cast<Settings&>(s)));
            } else {
              return std::to_string(proj(const_cast<Settings&>(s)));
            }
          }};
}

template <typename Proj>
Field flag(std::string key, std::string desc, Proj proj) {
  return {std::move(key), std::move(desc),
          [proj](Settings& s, const std::string& k, const std::string& v) { proj(s) = parse_bool(k, v); },
          [proj](const Settings& s) { return std::string(proj(const_cast<Settings&>(s)) ? "true" : "false"); }};
}

void add_llql_fields(std::vector<Field>& f, const std::string& prefix, TrainConfig Settings::*member) {
  auto p = [member](auto proj) { return [member, proj](Settings& s) -> decltype(auto) { return proj(s.*member); }; };
  f.push_back(num<int>(prefix + "episodes", "training episodes M", p([](TrainConfig& c) -> int& { return c.episodes; })));
  f.push_back(num<int>(prefix + "horizon", "steps per episode, 0 = environment horizon",
                       p([](TrainConfig& c) -> int& { return c.horizon; })));
  f.push_back(num<int>(prefix + "short_iterations", "short-term updates per step (I_s)",
                       p([](TrainConfig& c) -> int& { return c.short_iterations; })));
  f.push_back(num<int>(prefix + "long_iterations", "long-term updates per step (I_l)",
                       p([](TrainConfig& c) -> int& { return c.long_iterations; })));
  f.push_back(num<int>(prefix + "short_batch", "short-term batch size (N_s)",
                       p([](TrainConfig& c) -> int& { return c.short_batch; })));
  f.push_back(num<int>(prefix + "long_batch", "long-term batch size (N_l)",
                       p([](TrainConfig& c) -> int& { return c.long_batch; })));
  f.push_back(num<double>(prefix + "gamma", "discount factor", p([](TrainConfig& c) -> double& { return c.gamma; })));
  f.push_back(num<double>(prefix + "tau", "target soft-update rate", p([](TrainConfig& c) -> double& { return c.tau; })));
  f.push_back(num<double>(prefix + "delta", "dynamics step size", p([](TrainConfig& c) -> double& { return c.delta; })));
  f.push_back(num<double>(prefix + "noise_sigma0", "initial exploration noise scale",
                          p([](TrainConfig& c) -> double& { return c.noise_sigma0; })));
  f.push_back(num<double>(prefix + "noise_decay", "noise decay factor after a positive-return episode",
                          p([](TrainConfig& c) -> double& { return c.noise_decay; })));
  f.push_back(num<double>(prefix + "noise_floor", "lowest noise scale",
                          p([](TrainConfig& c) -> double& { return c.noise_floor; })));
  f.push_back({prefix + "noise_kind", "gaussian (i.i.d.) or ou (Ornstein-Uhlenbeck)",
               [member](Settings& s, const std::string& k, const std::string& v) {
                 (s.*member).noise_kind = parse_noise(k, v);
               },
               [member](const Settings& s) { return std::string(noise_name((s.*member).noise_kind)); }});
  f.push_back(num<double>(prefix + "noise_theta", "mean-reversion rate of the ou process",
                          p([](TrainConfig& c) -> double& { return c.noise_theta; })));
  f.push_back(num<double>(prefix + "short_lr", "short-term learning rate",
                          p([](TrainConfig& c) -> double& { return c.short_lr; })));
  f.push_back(num<long long>(prefix + "short_lr_switch_steps", "environment steps before the short-term rate drops",
                             p([](TrainConfig& c) -> long long& { return c.short_lr_switch_steps; })));
  f.push_back(num<double>(prefix + "short_lr_after", "short-term learning rate after the switch",
                          p([](TrainConfig& c) -> double& { return c.short_lr_after; })));
  f.push_back(num<double>(prefix + "long_lr", "long-term learning rate",
                          p([](TrainConfig& c) -> double& { return c.long_lr; })));
  f.push_back(num<std::size_t>(prefix + "buffer_capacity", "replay buffer capacity",
                               p([](TrainConfig& c) -> std::size_t& { return c.buffer_capacity; })));
  f.push_back(num<std::size_t>(prefix + "normalizer_samples", "transitions used to fit the state normalizer",
                               p([](TrainConfig& c) -> std::size_t& { return c.normalizer_samples; })));
  f.push_back({prefix + "hidden", "hidden layer widths, comma separated",
               [member](Settings& s, const std::string& k, const std::string& v) { (s.*member).hidden = parse_ints(k, v); },
               [member](const Settings& s) { return join((s.*member).hidden); }});
  f.push_back(flag(prefix + "squared_long_loss", "use the squared Bellman residual for L2",
                   p([](TrainConfig& c) -> bool& { return c.squared_long_loss; })));
}

void add_ddpg_fields(std::vector<Field>& f, const std::string& prefix, DdpgConfig Settings::*member) {
  auto p = [member](auto proj) { return [member, proj](Settings& s) -> decltype(auto) { return proj(s.*member); }; };
  f.push_back(num<int>(prefix + "episodes", "training episodes", p([](DdpgConfig& c) -> int& { return c.episodes; })));
  f.push_back(num<int>(prefix + "horizon", "steps per episode, 0 = environment horizon",
                       p([](DdpgConfig& c) -> int& { return c.horizon; })));
  f.push_back(num<double>(prefix + "critic_lr", "critic learning rate",
                          p([](DdpgConfig& c) -> double& { return c.critic_lr; })));
  f.push_back(num<double>(prefix + "actor_lr", "actor learning rate",
                          p([](DdpgConfig& c) -> double& { return c.actor_lr; })));
  f.push_back(num<double>(prefix + "gamma", "discount factor", p([](DdpgConfig& c) -> double& { return c.gamma; })));
  f.push_back(num<int>(prefix + "batch", "minibatch size", p([](DdpgConfig& c) -> int& { return c.batch; })));
  f.push_back(num<double>(prefix + "tau", "target soft-update rate", p([](DdpgConfig& c) -> double& { return c.tau; })));
  f.push_back(num<int>(prefix + "updates_per_step", "gradient updates per environment step",
                       p([](DdpgConfig& c) -> int& { return c.updates_per_step; })));
  f.push_back(num<double>(prefix + "noise_sigma0", "initial exploration noise scale",
                          p([](DdpgConfig& c) -> double& { return c.noise_sigma0; })));
  f.push_back(num<double>(prefix + "noise_decay", "noise decay factor after a positive-return episode",
                          p([](DdpgConfig& c) -> double& { return c.noise_decay; })));
  f.push_back(num<double>(prefix + "noise_floor", "lowest noise scale",
                          p([](DdpgConfig& c) -> double& { return c.noise_floor; })));
  f.push_back({prefix + "noise_kind", "gaussian (i.i.d.) or ou (Ornstein-Uhlenbeck)",
               [member](Settings& s, const std::string& k, const std::string& v) {
                 (s.*member).noise_kind = parse_noise(k, v);
               },
               [member](const Settings& s) { return std::string(noise_name((s.*member).noise_kind)); }});
  f.push_back(num<double>(prefix + "noise_theta", "mean-reversion rate of the ou process",
                          p([](DdpgConfig& c) -> double& { return c.noise_theta; })));
  f.push_back(num<std::size_t>(prefix + "buffer_capacity", "replay buffer capacity",
                               p([](DdpgConfig& c) -> std::size_t& { return c.buffer_capacity; })));
  f.push_back(num<std::size_t>(prefix + "normalizer_samples", "transitions used to fit the state normalizer",
                               p([](DdpgConfig& c) -> std::size_t& { return c.normalizer_samples; })));
  f.push_back({prefix + "hidden", "hidden layer widths, comma separated",
               [member](Settings& s, const std::string& k, const std::string& v) { (s.*member).hidden = parse_ints(k, v); },
               [member](const Settings& s) { return join((s.*member).hidden); }});
}

std::vector<Field> make_fields() {
  std::vector<Field> f;
  f.push_back({"env", "mountain_car or pendulum",
               [](Settings& s, const std::string&, const std::string& v) {
                 if (v != "mountain_car" && v != "pendulum") throw ConfigError("unknown environment '" + v + "'");
                 s.env = v;
               },
               [](const Settings& s) { return s.env; }});
  f.push_back(num<double>("goal_position", "mountain car goal position",
                          [](Settings& s) -> double& { return s.goal_position; }));
  f.push_back({"seeds", "training seeds, e.g. 0-19 or 0,4,7",
               [](Settings& s, const std::string& k, const std::string& v) { s.seeds = parse_seeds(k, v); },
               [](const Settings& s) { return join(s.seeds); }});
  f.push_back(num<int>("eval.runs", "evaluation episodes per method", [](Settings& s) -> int& { return s.eval_runs; }));
  f.push_back(num<std::uint64_t>("eval.seed", "seed of the evaluation start states",
                                 [](Settings& s) -> std::uint64_t& { return s.eval_seed; }));
  f.push_back(num<int>("jobs", "worker threads, 0 = hardware concurrency", [](Settings& s) -> int& { return s.jobs; }));
  add_llql_fields(f, "llql.", &Settings::llql);
  add_ddpg_fields(f, "ddpg.", &Settings::ddpg);
  add_llql_fields(f, "pendulum.llql.", &Settings::pendulum_llql);
  add_ddpg_fields(f, "pendulum.ddpg.", &Settings::pendulum_ddpg);
  f.push_back(num<int>("mpc.horizon", "planning horizon H", [](Settings& s) -> int& { return s.mpc.horizon; }));
  f.push_back(num<int>("mpc.candidates", "sampled sequences K", [](Settings& s) -> int& { return s.mpc.candidates; }));
  f.push_back(flag("mpc.resample", "draw fresh sequences every step", [](Settings& s) -> bool& { return s.mpc.resample; }));
  f.push_back(num<double>("mods.desired_velocity", "v_d of the trajectory reward mods",
                          [](Settings& s) -> double& { return s.mods.desired_velocity; }));
  f.push_back(num<double>("mods.speed_threshold", "speed threshold of the constraint reward mods",
                          [](Settings& s) -> double& { return s.mods.speed_threshold; }));
  f.push_back(num<double>("mods.top_position", "position treated as the top by the trajectory mods",
                          [](Settings& s) -> double& { return s.mods.top_position; }));
  f.push_back(flag("mods.c4_replaces", "r_c4 replaces the reward (true) or subtracts 10 (false)",
                   [](Settings& s) -> bool& { return s.mods.c4_replaces; }));
  f.push_back({"goal.preset", "load a goal preset, then apply later goal.* keys",
               [](Settings& s, const std::string&, const std::string& v) { s.goal = goal_preset(v); },
               [](const Settings&) { return std::string(); }});
  f.push_back({"goal.kind", "none, trajectory or constraint",
               [](Settings& s, const std::string& k, const std::string& v) {
                 if (v == "none") s.goal.kind = GoalKind::None;
                 else if (v == "trajectory") s.goal.kind = GoalKind::Trajectory;
                 else if (v == "constraint") s.goal.kind = GoalKind::Constraint;
                 else throw ConfigError("invalid value '" + v + "' for key '" + k + "'");
               },
               [](const Settings& s) {
                 return std::string(s.goal.kind == GoalKind::None         ? "none"
                                    : s.goal.kind == GoalKind::Trajectory ? "trajectory"
                                                                          : "constraint");
               }});
  f.push_back(num<int>("goal.index", "state component tracked or bounded", [](Settings& s) -> int& { return s.goal.index; }));
  f.push_back(num<double>("goal.value", "desired next value of the tracked component",
                          [](Settings& s) -> double& { return s.goal.value; }));
  f.push_back(num<double>("goal.gamma1", "weight of the long-term term", [](Settings& s) -> double& { return s.goal.gamma1; }));
  f.push_back(num<double>("goal.gamma2", "weight of the tracking term", [](Settings& s) -> double& { return s.goal.gamma2; }));
  f.push_back(num<int>("goal.active_index", "state component of the activation predicate",
                       [](Settings& s) -> int& { return s.goal.active_index; }));
  f.push_back({"goal.active_cmp", "lt, le, gt or ge",
               [](Settings& s, const std::string& k, const std::string& v) { s.goal.active_cmp = parse_cmp(k, v); },
               [](const Settings& s) { return std::string(cmp_name(s.goal.active_cmp)); }});
  f.push_back(num<double>("goal.active_threshold", "threshold of the activation predicate",
                          [](Settings& s) -> double& { return s.goal.active_threshold; }));
  f.push_back(flag("goal.active_abs", "compare the absolute value in the activation predicate",
                   [](Settings& s) -> bool& { return s.goal.active_abs; }));
  f.push_back(num<double>("goal.bound", "constraint bound c", [](Settings& s) -> double& { return s.goal.bound; }));
  f.push_back(num<double>("goal.margin", "value past which the constraint branch fires",
                          [](Settings& s) -> double& { return s.goal.margin; }));
  f.push_back(flag("goal.two_sided", "bound |x| instead of x", [](Settings& s) -> bool& { return s.goal.two_sided; }));
  f.push_back({"goal.side", "upper or lower (one-sided constraints)",
               [](Settings& s, const std::string& k, const std::string& v) {
                 if (v == "upper") s.goal.side = BoundSide::Upper;
                 else if (v == "lower") s.goal.side = BoundSide::Lower;
                 else throw ConfigError("invalid value '" + v + "' for key '" + k + "'");
               },
               [](const Settings& s) { return std::string(s.goal.side == BoundSide::Upper ? "upper" : "lower"); }});
  f.push_back(flag("goal.predictive", "also fire when the next state is predicted past the margin",
                   [](Settings& s) -> bool& { return s.goal.predictive; }));
  f.push_back(num<int>("goal.window_start", "first step the goal may be active",
                       [](Settings& s) -> int& { return s.goal.window_start; }));
  f.push_back(num<int>("goal.window_end", "step the goal expires, -1 = never",
                       [](Settings& s) -> int& { return s.goal.window_end; }));
  f.push_back(num<double>("goal.hazard", "threshold counted by s_out, 0 = off",
                          [](Settings& s) -> double& { return s.goal.hazard; }));
  f.push_back({"goal.tracking", "at_goal or over_active",
               [](Settings& s, const std::string& k, const std::string& v) {
                 if (v == "at_goal") s.goal.tracking = TrackingMode::AtGoal;
                 else if (v == "over_active") s.goal.tracking = TrackingMode::OverActive;
                 else throw ConfigError("invalid value '" + v + "' for key '" + k + "'");
               },
               [](const Settings& s) {
                 return std::string(s.goal.tracking == TrackingMode::AtGoal ? "at_goal" : "over_active");
               }});
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = make_fields();
  return f;
}

}  // namespace

void set_setting(Settings& s, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(s, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(Settings& s, const std::string& text) {
  std::istringstream in(text);
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    set_setting(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(Settings& s, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(s, ss.str());
}

std::vector<std::pair<std::string, std::string>> settings_schema() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.description);
  return out;
}

std::string dump_settings(const Settings& s) {
  std::string out;
  for (const auto& f : fields()) {
    if (f.key == "goal.preset") continue;
    out += f.key + " = " + f.get(s) + "\n";
  }
  return out;
}

}  // namespace llql
