#include "llql/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "llql/controller.hpp"
#include "llql/errors.hpp"
#include "llql/log.hpp"
#include "llql/seeding.hpp"

namespace llql {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (episodes < 1) fail("episodes must be >= 1");
  if (horizon < 0) fail("horizon must be >= 0");
  if (short_iterations < 0 || long_iterations < 0) fail("iteration counts must be >= 0");
  if (short_batch < 1 || long_batch < 1) fail("batch sizes must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(tau >= 0.0 && tau <= 1.0)) fail("tau must lie in [0, 1]");
  if (!(delta > 0.0)) fail("delta must be positive");
  if (!(noise_sigma0 > 0.0)) fail("noise_sigma0 must be positive");
  if (!(noise_decay > 0.0 && noise_decay <= 1.0)) fail("noise_decay must lie in (0, 1]");
  if (!(noise_floor >= 0.0 && noise_floor <= noise_sigma0)) fail("noise_floor must lie in [0, noise_sigma0]");
  if (!(noise_theta > 0.0 && noise_theta <= 1.0)) fail("noise_theta must lie in (0, 1]");
  if (!(short_lr > 0.0 && short_lr_after > 0.0 && long_lr > 0.0)) fail("learning rates must be positive");
  if (buffer_capacity < 1) fail("buffer_capacity must be >= 1");
  if (normalizer_samples < 2) fail("normalizer_samples must be >= 2");
  if (hidden.empty()) fail("hidden layer list must not be empty");
  for (int h : hidden) {
    if (h < 1) fail("hidden layer sizes must be >= 1");
  }
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string TrainLog::to_csv() const {
  std::ostringstream os;
  os << "episode,cumulative_reward,steps,L1,L2,sigma\n";
  for (const auto& e : episodes) {
    os << e.episode << ',' << format_double(e.cumulative_reward) << ',' << e.steps << ',' << format_double(e.l1)
       << ',' << format_double(e.l2) << ',' << format_double(e.sigma) << '\n';
  }
  return os.str();
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write training log '" + path.string() + "'");
  os << to_csv();
}

TrainLog TrainLog::read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read training log '" + path.string() + "'");
  TrainLog log;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    EpisodeRecord e;
    char comma = 0;
    ls >> e.episode >> comma >> e.cumulative_reward >> comma >> e.steps >> comma >> e.l1 >> comma >> e.l2 >> comma >>
        e.sigma;
    if (!ls) throw IoError("malformed training log row: " + line);
    log.episodes.push_back(e);
  }
  return log;
}

namespace {

void save_checkpoint(const LlqlModel& model, const TrainConfig& config, const EnvSpec& spec,
                     const std::string& name) {
  nlohmann::json meta{{"env", spec.to_json()}, {"delta", config.delta}, {"seed", config.seed},
                      {"role", "llql"},        {"checkpoint", name}};
  save_bundle(to_bundle(model, meta), config.checkpoint_dir / (name + ".llql"));
}

}  // namespace

TrainResult train_llql(const Environment& env, const TrainConfig& config, const EpisodeCallback& on_episode) {
  config.validate();
  const EnvSpec& spec = env.spec();
  const int horizon = config.horizon > 0 ? config.horizon : spec.horizon;
  const ActionBounds& bounds = spec.action_bounds;

  std::mt19937_64 init_rng(mix_seed(config.seed, stream::kInit));
  std::mt19937_64 noise_rng(mix_seed(config.seed, stream::kNoise));
  std::mt19937_64 policy_rng(mix_seed(config.seed, stream::kPolicy));

  TrainResult result{
      {DynamicsModel(spec.state_dim, spec.action_dim, config.delta, config.hidden, init_rng),
       QModel(spec.state_dim, spec.action_dim, config.hidden, init_rng)},
      {"llql", config.seed, {}}};
  LlqlModel& model = result.model;

  AdamConfig short_opt{{config.short_lr, config.short_lr_switch_steps * config.short_iterations, config.short_lr_after}};
  AdamConfig long_opt{{config.long_lr, -1, config.long_lr}};
  Adam f_opt(model.dynamics.f_net(), short_opt);
  Adam g_opt(model.dynamics.g_net(), short_opt);
  Adam v_opt(model.q.v_net(), long_opt);
  Adam h_opt(model.q.h_net(), long_opt);
  Adam d_opt(model.q.d_net(), long_opt);

  ReplayBuffer buffer(config.buffer_capacity, mix_seed(config.seed, stream::kReplay));
  ExplorationNoise noise(config.noise_sigma0, config.noise_decay, config.noise_floor, config.noise_kind,
                         config.noise_theta);
  const LongTermLossOptions loss_opts{config.gamma, config.squared_long_loss};
  bool normalizer_ready = false;
  double best_reward = -std::numeric_limits<double>::infinity();

  for (int episode = 1; episode <= config.episodes; ++episode) {
    State x = env.reset(mix_seed(config.seed, stream::kReset + 16 * static_cast<std::uint64_t>(episode)));
    EpisodeRecord rec;
    rec.episode = episode;
    rec.sigma = noise.sigma();
    noise.begin_episode();
    double l1_sum = 0.0, l2_sum = 0.0;
    long long l1_count = 0, l2_count = 0;

    for (int k = 1; k <= horizon; ++k) {
      const SynthesizedAction base = long_term_action(model.q, x, bounds, policy_rng);
      const Action u = bounds.clip(base.clipped + noise.next(spec.action_dim, noise_rng));
      const StepResult sr = env.step(x, u, k);
      buffer.push({x, u, sr.next_state, sr.reward, sr.goal});
      rec.cumulative_reward += sr.reward;
      rec.steps = k;
      rec.goal = rec.goal || sr.goal;

      if (!normalizer_ready && buffer.size() >= config.normalizer_samples) {
        Mat states(spec.state_dim, static_cast<Eigen::Index>(buffer.size()));
        for (std::size_t i = 0; i < buffer.size(); ++i) states.col(static_cast<Eigen::Index>(i)) = buffer.at(i).x;
        const Normalizer norm = Normalizer::fit(states);
        model.dynamics.set_normalizer(norm);
        model.q.set_normalizer(norm);
        normalizer_ready = true;
      }

      if (normalizer_ready) {
        for (int it = 0; it < config.short_iterations; ++it) {
          const auto batch = buffer.sample(static_cast<std::size_t>(config.short_batch));
          const ShortTermGradients g = short_term_gradients(model.dynamics, batch);
          if (!std::isfinite(g.loss)) {
            throw NonFiniteValue("short-term loss became non-finite at episode " + std::to_string(episode) +
                                 ", step " + std::to_string(k));
          }
          f_opt.step(model.dynamics.f_net(), g.f, "L1 (f)");
          g_opt.step(model.dynamics.g_net(), g.g, "L1 (g)");
          l1_sum += g.loss;
          ++l1_count;
        }
        for (int it = 0; it < config.long_iterations; ++it) {
          const auto batch = buffer.sample(static_cast<std::size_t>(config.long_batch));
          const LongTermGradients g = long_term_gradients(model.q, batch, bounds, loss_opts);
          if (!std::isfinite(g.loss)) {
            throw NonFiniteValue("long-term loss became non-finite at episode " + std::to_string(episode) +
                                 ", step " + std::to_string(k) + " (last L1 " +
                                 format_double(l1_count ? l1_sum / static_cast<double>(l1_count) : 0.0) + ")");
          }
          v_opt.step(model.q.v_net(), g.v, "L2 (V)");
          h_opt.step(model.q.h_net(), g.h, "L2 (h)");
          d_opt.step(model.q.d_net(), g.d, "L2 (d)");
          model.q.update_targets(config.tau);
          l2_sum += g.loss;
          ++l2_count;
        }
      }
      x = sr.next_state;
      if (sr.done) break;
    }

    rec.l1 = l1_count ? l1_sum / static_cast<double>(l1_count) : 0.0;
    rec.l2 = l2_count ? l2_sum / static_cast<double>(l2_count) : 0.0;
    noise.end_episode(rec.cumulative_reward);
    result.log.episodes.push_back(rec);

    if (!config.checkpoint_dir.empty()) {
      if (config.checkpoint_every > 0 && episode % config.checkpoint_every == 0) {
        save_checkpoint(model, config, spec, "episode_" + std::to_string(episode));
      }
      if (rec.cumulative_reward > best_reward) save_checkpoint(model, config, spec, "best");
    }
    best_reward = std::max(best_reward, rec.cumulative_reward);
    result.transitions = buffer.size();
    if (on_episode && !on_episode(rec, model)) break;
  }
  return result;
}

ModelBundle to_bundle(const LlqlModel& model, nlohmann::json metadata) {
  ModelBundle b;
  metadata["delta"] = model.dynamics.delta();
  metadata["action_dim"] = model.dynamics.action_dim();
  if (!metadata.contains("role")) metadata["role"] = "llql";
  b.metadata = std::move(metadata);
  b.normalizer = model.q.normalizer();
  b.nets = {{"f", model.dynamics.f_net()},  {"g", model.dynamics.g_net()}, {"v", model.q.v_net()},
            {"h", model.q.h_net()},         {"d", model.q.d_net()},      {"v_target", model.q.v_target()},
            {"h_target", model.q.h_target()}, {"d_target", model.q.d_target()}};
  return b;
}

DynamicsModel dynamics_from_bundle(const ModelBundle& bundle) {
  if (!bundle.metadata.contains("delta") || !bundle.metadata.contains("action_dim")) {
    throw ConfigError("model bundle lacks delta/action_dim metadata");
  }
  return DynamicsModel(bundle.net("f"), bundle.net("g"), bundle.metadata.at("delta").get<double>(),
                       bundle.normalizer, bundle.metadata.at("action_dim").get<int>());
}

LlqlModel llql_from_bundle(const ModelBundle& bundle) {
  LlqlModel m{dynamics_from_bundle(bundle),
              QModel(bundle.net("v"), bundle.net("h"), bundle.net("d"), bundle.normalizer,
                     bundle.metadata.at("action_dim").get<int>())};
  if (bundle.has("v_target")) {
    m.q.v_target() = bundle.net("v_target");
    m.q.h_target() = bundle.net("h_target");
    m.q.d_target() = bundle.net("d_target");
  }
  return m;
}

}  // namespace llql
