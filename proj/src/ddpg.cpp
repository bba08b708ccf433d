#include "llql/ddpg.hpp"

#include <cmath>

#include "llql/errors.hpp"
#include "llql/seeding.hpp"

namespace llql {

namespace {

std::vector<int> sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

}  // namespace

void DdpgConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (episodes < 1) fail("episodes must be >= 1");
  if (horizon < 0) fail("horizon must be >= 0");
  if (hidden.empty()) fail("hidden layer list must not be empty");
  if (!(critic_lr > 0.0 && actor_lr > 0.0)) fail("learning rates must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (batch < 1 || updates_per_step < 0) fail("batch must be >= 1 and updates_per_step >= 0");
  if (!(tau >= 0.0 && tau <= 1.0)) fail("tau must lie in [0, 1]");
  if (!(noise_sigma0 > 0.0)) fail("noise_sigma0 must be positive");
  if (normalizer_samples < 2) fail("normalizer_samples must be >= 2");
}

DdpgModel::DdpgModel(int state_dim, ActionBounds bounds, const std::vector<int>& hidden, std::mt19937_64& rng)
    : actor_(sizes(state_dim, hidden, bounds.dim()), rng),
      critic_(sizes(state_dim + bounds.dim(), hidden, 1), rng),
      actor_t_(actor_),
      critic_t_(critic_),
      normalizer_(Normalizer::identity(state_dim)),
      bounds_(std::move(bounds)) {}

DdpgModel::DdpgModel(Mlp actor, Mlp critic, Normalizer normalizer, ActionBounds bounds)
    : actor_(std::move(actor)),
      critic_(std::move(critic)),
      actor_t_(actor_),
      critic_t_(critic_),
      normalizer_(std::move(normalizer)),
      bounds_(std::move(bounds)) {
  if (actor_.output_size() != bounds_.dim() || critic_.input_size() != actor_.input_size() + bounds_.dim() ||
      critic_.output_size() != 1) {
    throw DimensionMismatch("actor/critic networks do not form a DDPG model");
  }
}

Mat DdpgModel::squash(const Mat& raw) const {
  const Vec center = 0.5 * (bounds_.high + bounds_.low);
  const Vec half = 0.5 * (bounds_.high - bounds_.low);
  Mat out = raw.array().tanh();
  out = (out.array().colwise() * half.array()).colwise() + center.array();
  return out;
}

Mat DdpgModel::act(const Mat& states) const { return squash(actor_.forward(normalizer_.apply(states))); }

Action DdpgModel::act(const State& x) const {
  const Mat m = x;
  return act(m).col(0);
}

double DdpgModel::q_value(const State& x, const Action& u) const {
  Vec in(x.size() + u.size());
  in << normalizer_.apply(x), u;
  return critic_.forward(in)(0);
}

DdpgResult train_ddpg(const Environment& env, const DdpgConfig& config, const std::optional<RewardMod>& mod,
                      const DdpgEpisodeCallback& on_episode) {
  config.validate();
  const EnvSpec& spec = env.spec();
  const int horizon = config.horizon > 0 ? config.horizon : spec.horizon;
  const int sd = spec.state_dim;
  const int ad = spec.action_dim;

  std::mt19937_64 init_rng(mix_seed(config.seed, stream::kInit));
  std::mt19937_64 noise_rng(mix_seed(config.seed, stream::kNoise));
  DdpgResult result{DdpgModel(sd, spec.action_bounds, config.hidden, init_rng),
                    {mod ? "ddpg+" + mod->id : "ddpg", config.seed, {}}};
  DdpgModel& model = result.model;
  Adam actor_opt(model.actor(), {{config.actor_lr, -1, config.actor_lr}});
  Adam critic_opt(model.critic(), {{config.critic_lr, -1, config.critic_lr}});
  ReplayBuffer buffer(config.buffer_capacity, mix_seed(config.seed, stream::kReplay));
  ExplorationNoise noise(config.noise_sigma0, config.noise_decay, config.noise_floor, config.noise_kind,
                         config.noise_theta);
  bool normalizer_ready = false;
  const Vec half = 0.5 * (spec.action_bounds.high - spec.action_bounds.low);

  for (int episode = 1; episode <= config.episodes; ++episode) {
    State x = env.reset(mix_seed(config.seed, stream::kReset + 16 * static_cast<std::uint64_t>(episode)));
    EpisodeRecord rec;
    rec.episode = episode;
    rec.sigma = noise.sigma();
    noise.begin_episode();
    double loss_sum = 0.0;
    long long loss_count = 0;

    for (int k = 1; k <= horizon; ++k) {
      const Action u = spec.action_bounds.clip(model.act(x) + noise.next(ad, noise_rng));
      const StepResult sr = env.step(x, u, k);
      const double stored = mod ? mod->apply({sr.reward, sr.next_state, sr.goal}) : sr.reward;
      buffer.push({x, u, sr.next_state, stored, sr.goal});
      rec.cumulative_reward += sr.reward;
      rec.steps = k;
      rec.goal = rec.goal || sr.goal;

      if (!normalizer_ready && buffer.size() >= config.normalizer_samples) {
        Mat states(sd, static_cast<Eigen::Index>(buffer.size()));
        for (std::size_t i = 0; i < buffer.size(); ++i) states.col(static_cast<Eigen::Index>(i)) = buffer.at(i).x;
        model.set_normalizer(Normalizer::fit(states));
        normalizer_ready = true;
      }
      if (normalizer_ready) {
        for (int it = 0; it < config.updates_per_step; ++it) {
          const auto batch = buffer.sample(static_cast<std::size_t>(config.batch));
          const auto n = static_cast<Eigen::Index>(batch.size());
          Mat xs(sd, n), us(ad, n), xn(sd, n);
          Eigen::RowVectorXd r(n), notdone(n);
          for (Eigen::Index i = 0; i < n; ++i) {
            const Transition& t = *batch[static_cast<std::size_t>(i)];
            xs.col(i) = t.x;
            us.col(i) = t.u;
            xn.col(i) = t.x_next;
            r(i) = t.reward;
            notdone(i) = t.done ? 0.0 : 1.0;
          }
          const Mat zs = model.normalizer().apply(xs);
          const Mat zn = model.normalizer().apply(xn);

          // Critic: mean squared Bellman error against the target networks.
          Mat next_in(sd + ad, n);
          next_in << zn, model.squash(model.actor_target().forward(zn));
          const Eigen::RowVectorXd next_q = model.critic_target().forward(next_in).row(0);
          const Eigen::RowVectorXd y = r.array() + config.gamma * notdone.array() * next_q.array();
          Mat in(sd + ad, n);
          in << zs, us;
          ForwardTape ctape;
          const Eigen::RowVectorXd q = model.critic().forward(in, ctape).row(0);
          const Eigen::RowVectorXd err = q - y;
          const double loss = err.squaredNorm() / static_cast<double>(n);
          if (!std::isfinite(loss)) {
            throw NonFiniteValue("DDPG critic loss became non-finite at episode " + std::to_string(episode) +
                                 ", step " + std::to_string(k));
          }
          const Mat dq = (2.0 / static_cast<double>(n)) * err;
          critic_opt.step(model.critic(), model.critic().backward(ctape, dq), "DDPG critic loss");
          loss_sum += loss;
          ++loss_count;

          // Actor: ascend Q(x, mu(x)) through the tanh squashing.
          ForwardTape atape;
          const Mat raw = model.actor().forward(zs, atape);
          const Mat mu = model.squash(raw);
          Mat pin(sd + ad, n);
          pin << zs, mu;
          ForwardTape ptape;
          (void)model.critic().forward(pin, ptape);
          const MlpGradients qgrad = model.critic().backward(ptape, Mat::Constant(1, n, -1.0 / static_cast<double>(n)));
          const Mat du = qgrad.input.bottomRows(ad);
          const Mat th = raw.array().tanh();
          const Mat draw = (du.array() * (1.0 - th.array().square())).colwise() * half.array();
          actor_opt.step(model.actor(), model.actor().backward(atape, draw), "DDPG actor objective");

          soft_update(model.critic_target(), model.critic(), config.tau);
          soft_update(model.actor_target(), model.actor(), config.tau);
        }
      }
      x = sr.next_state;
      if (sr.done) break;
    }
    rec.l2 = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    noise.end_episode(rec.cumulative_reward);
    result.log.episodes.push_back(rec);
    if (on_episode && !on_episode(rec, model)) break;
  }
  return result;
}

ModelBundle to_bundle(const DdpgModel& model, nlohmann::json metadata) {
  ModelBundle b;
  metadata["role"] = "ddpg";
  metadata["action_low"] = std::vector<double>(model.bounds().low.data(), model.bounds().low.data() + model.bounds().dim());
  metadata["action_high"] =
      std::vector<double>(model.bounds().high.data(), model.bounds().high.data() + model.bounds().dim());
  b.metadata = std::move(metadata);
  b.normalizer = model.normalizer();
  b.nets = {{"actor", model.actor()},
            {"critic", model.critic()},
            {"actor_target", model.actor_target()},
            {"critic_target", model.critic_target()}};
  return b;
}

DdpgModel ddpg_from_bundle(const ModelBundle& bundle) {
  const auto lo = bundle.metadata.at("action_low").get<std::vector<double>>();
  const auto hi = bundle.metadata.at("action_high").get<std::vector<double>>();
  ActionBounds bounds{Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                      Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size()))};
  DdpgModel m(bundle.net("actor"), bundle.net("critic"), bundle.normalizer, bounds);
  if (bundle.has("actor_target")) {
    m.actor_target() = bundle.net("actor_target");
    m.critic_target() = bundle.net("critic_target");
  }
  return m;
}

}  // namespace llql
