#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "llql/env.hpp"
#include "llql/model_io.hpp"
#include "llql/nn.hpp"
#include "llql/replay.hpp"
#include "llql/reward_mods.hpp"
#include "llql/trainer.hpp"

namespace llql {

struct DdpgConfig {
  int episodes = 100;
  int horizon = 0;
  std::vector<int> hidden = {200, 200};
  double critic_lr = 1e-5;
  double actor_lr = 1e-6;
  double gamma = 0.99;
  int batch = 8;
  double tau = 0.1;
  int updates_per_step = 1;
  double noise_sigma0 = 0.5;
  double noise_decay = 0.99;
  double noise_floor = 0.01;
  NoiseKind noise_kind = NoiseKind::OrnsteinUhlenbeck;
  double noise_theta = 0.15;
  std::size_t buffer_capacity = 1'000'000;
  std::size_t normalizer_samples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic actor-critic. The actor's raw output is squashed with tanh
/// onto the action box; the critic sees [normalized state; action].
class DdpgModel {
 public:
  DdpgModel() = default;
  DdpgModel(int state_dim, ActionBounds bounds, const std::vector<int>& hidden, std::mt19937_64& rng);
  DdpgModel(Mlp actor, Mlp critic, Normalizer normalizer, ActionBounds bounds);

  [[nodiscard]] Action act(const State& x) const;
  [[nodiscard]] Mat act(const Mat& states) const;
  [[nodiscard]] double q_value(const State& x, const Action& u) const;

  [[nodiscard]] const ActionBounds& bounds() const { return bounds_; }
  [[nodiscard]] const Normalizer& normalizer() const { return normalizer_; }
  void set_normalizer(Normalizer n) { normalizer_ = std::move(n); }

  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  Mlp& actor_target() { return actor_t_; }
  Mlp& critic_target() { return critic_t_; }
  [[nodiscard]] const Mlp& actor() const { return actor_; }
  [[nodiscard]] const Mlp& critic() const { return critic_; }
  [[nodiscard]] const Mlp& actor_target() const { return actor_t_; }
  [[nodiscard]] const Mlp& critic_target() const { return critic_t_; }

  /// Squashes raw actor outputs (columns) onto the action box.
  [[nodiscard]] Mat squash(const Mat& raw) const;

 private:
  Mlp actor_, critic_, actor_t_, critic_t_;
  Normalizer normalizer_;
  ActionBounds bounds_;
};

struct DdpgResult {
  DdpgModel model;
  TrainLog log;
};

using DdpgEpisodeCallback = std::function<bool(const EpisodeRecord&, const DdpgModel&)>;

/// Trains DDPG; when `mod` is set the stored (and learned-from) reward is the
/// modified one while the log records the environment's own reward.
[[nodiscard]] DdpgResult train_ddpg(const Environment& env, const DdpgConfig& config,
                                    const std::optional<RewardMod>& mod = std::nullopt,
                                    const DdpgEpisodeCallback& on_episode = {});

[[nodiscard]] ModelBundle to_bundle(const DdpgModel& model, nlohmann::json metadata);
[[nodiscard]] DdpgModel ddpg_from_bundle(const ModelBundle& bundle);

}  // namespace llql
