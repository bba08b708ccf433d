#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "llql/types.hpp"

namespace llql {

struct Transition {
  State x;
  Action u;
  State x_next;
  double reward = 0.0;
  /// True terminal (goal reached); horizon truncation is not terminal.
  bool done = false;
};

/// Fixed-capacity FIFO store of transitions with uniform sampling with
/// replacement.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  void push(Transition t);
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  /// i-th stored transition, oldest first.
  [[nodiscard]] const Transition& at(std::size_t i) const;

  /// `n` transitions drawn uniformly with replacement. Throws if empty.
  [[nodiscard]] std::vector<const Transition*> sample(std::size_t n);

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t head_ = 0;  // slot of the oldest item once full
  std::mt19937_64 rng_;
};

enum class NoiseKind {
  /// Independent Normal(0, sigma^2) draws every step.
  Gaussian,
  /// Ornstein-Uhlenbeck process z <- z - theta z + sigma N(0, 1), reset to 0
  /// at each episode start.
  OrnsteinUhlenbeck,
};

/// Additive Gaussian exploration noise whose scale decays after episodes
/// with positive cumulative reward.
class ExplorationNoise {
 public:
  ExplorationNoise(double sigma0, double decay, double floor, NoiseKind kind = NoiseKind::Gaussian,
                   double theta = 0.15);

  /// One i.i.d. Normal(0, sigma^2) vector.
  [[nodiscard]] Vec sample(int dim, std::mt19937_64& rng) const;
  /// Next value of the configured process (equals sample() for Gaussian).
  [[nodiscard]] Vec next(int dim, std::mt19937_64& rng);
  void begin_episode() { state_.resize(0); }
  /// sigma <- max(floor, sigma * decay) iff episode_return > 0.
  void end_episode(double episode_return);

  [[nodiscard]] double sigma() const { return sigma_; }
  [[nodiscard]] NoiseKind kind() const { return kind_; }

 private:
  double sigma_;
  double decay_;
  double floor_;
  NoiseKind kind_;
  double theta_;
  Vec state_;
};

}  // namespace llql
