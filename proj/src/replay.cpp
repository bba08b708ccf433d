#include "llql/replay.hpp"

#include <algorithm>
#include <cmath>

#include "llql/errors.hpp"

namespace llql {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
  if (capacity == 0) throw InvalidInput("replay buffer capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
  if (!std::isfinite(t.reward)) throw InvalidInput("transition reward is not finite");
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw InvalidInput("replay buffer index out of range");
  return data_[(head_ + i) % data_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n) {
  if (data_.empty()) throw InvalidInput("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&data_[pick(rng_)]);
  return out;
}

ExplorationNoise::ExplorationNoise(double sigma0, double decay, double floor, NoiseKind kind, double theta)
    : sigma_(sigma0), decay_(decay), floor_(floor), kind_(kind), theta_(theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw InvalidInput("noise theta must lie in (0, 1]");
  if (!(sigma0 > 0.0)) throw InvalidInput("initial noise scale must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidInput("noise decay must lie in (0, 1]");
  if (!(floor >= 0.0 && floor <= sigma0)) throw InvalidInput("noise floor must lie in [0, sigma0]");
}

Vec ExplorationNoise::sample(int dim, std::mt19937_64& rng) const {
  std::normal_distribution<double> n(0.0, sigma_);
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out(i) = n(rng);
  return out;
}

Vec ExplorationNoise::next(int dim, std::mt19937_64& rng) {
  if (kind_ == NoiseKind::Gaussian) return sample(dim, rng);
  if (state_.size() != dim) state_ = Vec::Zero(dim);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < dim; ++i) state_(i) += -theta_ * state_(i) + sigma_ * n(rng);
  return state_;
}

void ExplorationNoise::end_episode(double episode_return) {
  if (episode_return > 0.0) sigma_ = std::max(floor_, sigma_ * decay_);
}

}  // namespace llql
