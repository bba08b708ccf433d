#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "llql/dynamics.hpp"
#include "llql/env.hpp"
#include "llql/model_io.hpp"
#include "llql/qmodel.hpp"

namespace llql {

/// LLQL training hyperparameters. Defaults follow the published network
/// settings; noise constants and buffer capacity are our own choices.
struct TrainConfig {
  int episodes = 100;
  /// 0 uses the environment's horizon.
  int horizon = 0;
  int short_iterations = 5;
  int long_iterations = 5;
  int short_batch = 100;
  int long_batch = 10;
  double gamma = 0.999;
  double tau = 0.001;
  double delta = 0.001;
  double noise_sigma0 = 0.5;
  double noise_decay = 0.99;
  double noise_floor = 0.01;
  NoiseKind noise_kind = NoiseKind::OrnsteinUhlenbeck;
  double noise_theta = 0.15;
  double short_lr = 1e-3;
  /// Environment steps with updates before the short-term rate drops.
  long long short_lr_switch_steps = 20000;
  double short_lr_after = 1e-4;
  double long_lr = 1e-3;
  std::size_t buffer_capacity = 1'000'000;
  /// Transitions collected before the state normalizer is fitted and frozen;
  /// network updates start once it is.
  std::size_t normalizer_samples = 1000;
  std::vector<int> hidden = {200, 200};
  /// Fit Q with the mean squared Bellman residual. With the mean absolute
  /// residual (false) Q tracks the median target, which ignores the rare goal
  /// reward, and the greedy policy never learns to leave the valley.
  bool squared_long_loss = true;
  std::uint64_t seed = 0;
  /// Save a checkpoint every N episodes (0 disables) and at the best return.
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct EpisodeRecord {
  int episode = 0;
  double cumulative_reward = 0.0;
  int steps = 0;
  double l1 = 0.0;  // mean short-term loss over the episode's updates
  double l2 = 0.0;  // mean long-term loss over the episode's updates
  double sigma = 0.0;
  bool goal = false;
};

struct TrainLog {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> episodes;

  /// Header: episode,cumulative_reward,steps,L1,L2,sigma
  [[nodiscard]] std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  [[nodiscard]] static TrainLog read_csv(const std::filesystem::path& path);
  [[nodiscard]] double final_reward() const { return episodes.empty() ? 0.0 : episodes.back().cumulative_reward; }
};

struct LlqlModel {
  DynamicsModel dynamics;
  QModel q;
};

struct TrainResult {
  LlqlModel model;
  TrainLog log;
  /// Replay buffer size when training ended.
  std::size_t transitions = 0;
};

/// Called after every episode; returning false stops training early.
using EpisodeCallback = std::function<bool(const EpisodeRecord&, const LlqlModel&)>;

/// Runs the LLQL training loop: per environment step, act with the
/// pseudo-inverse action plus exploration noise, store the transition, then run
/// the short-term and long-term updates with soft target tracking.
[[nodiscard]] TrainResult train_llql(const Environment& env, const TrainConfig& config,
                                     const EpisodeCallback& on_episode = {});

[[nodiscard]] ModelBundle to_bundle(const LlqlModel& model, nlohmann::json metadata);
[[nodiscard]] LlqlModel llql_from_bundle(const ModelBundle& bundle);
/// Loads only f, g from any bundle carrying them (LLQL or dynamics-only).
[[nodiscard]] DynamicsModel dynamics_from_bundle(const ModelBundle& bundle);

/// Printable value of a double that round-trips exactly ("%.17g").
[[nodiscard]] std::string format_double(double v);

}  // namespace llql
