#pragma once

#include <random>
#include <span>
#include <vector>

#include "llql/nn.hpp"
#include "llql/replay.hpp"

namespace llql {

/// f(x), g(x) evaluated at one state. g is state_dim x action_dim.
struct LocalDynamics {
  Vec f;
  Mat g;
  double delta = 0.0;
};

/// Short-term prediction model x_{k+1} ~ x_k + delta * (f(x_k) + g(x_k) u_k).
/// g's network emits the state_dim x action_dim matrix row-major.
class DynamicsModel {
 public:
  DynamicsModel() = default;
  DynamicsModel(int state_dim, int action_dim, double delta, const std::vector<int>& hidden, std::mt19937_64& rng);
  /// Wraps existing networks (shapes are checked).
  DynamicsModel(Mlp f, Mlp g, double delta, Normalizer normalizer, int action_dim);

  [[nodiscard]] int state_dim() const { return f_.output_size(); }
  [[nodiscard]] int action_dim() const { return action_dim_; }
  [[nodiscard]] double delta() const { return delta_; }

  [[nodiscard]] LocalDynamics local(const State& x) const;
  /// Raw model prediction, no clipping.
  [[nodiscard]] State predict_next(const State& x, const Action& u) const;
  /// Batched prediction; columns are samples.
  [[nodiscard]] Mat predict_next(const Mat& states, const Mat& actions) const;

  [[nodiscard]] const Mlp& f_net() const { return f_; }
  [[nodiscard]] const Mlp& g_net() const { return g_; }
  [[nodiscard]] Mlp& f_net() { return f_; }
  [[nodiscard]] Mlp& g_net() { return g_; }
  [[nodiscard]] const Normalizer& normalizer() const { return normalizer_; }
  void set_normalizer(Normalizer n);
  /// Test hook: overrides delta (e.g. to 0).
  void set_delta(double delta) { delta_ = delta; }

 private:
  Mlp f_;
  Mlp g_;
  double delta_ = 1e-3;
  Normalizer normalizer_;
  int action_dim_ = 0;
};

/// L1 = mean_i || x_{i+1} - x_i - delta (f(x_i) + g(x_i) u_i) ||_2.
[[nodiscard]] double short_term_loss(const DynamicsModel& model, std::span<const Transition> batch);

struct ShortTermGradients {
  double loss = 0.0;
  MlpGradients f;
  MlpGradients g;
};

/// L1 and its exact gradient with respect to the f and g parameters.
[[nodiscard]] ShortTermGradients short_term_gradients(const DynamicsModel& model,
                                                      std::span<const Transition* const> batch);

}  // namespace llql
