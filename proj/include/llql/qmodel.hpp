#pragma once

#include <random>
#include <span>
#include <vector>

#include "llql/nn.hpp"
#include "llql/replay.hpp"

namespace llql {

/// V(x), h(x), d(x) at one state; d is m x action_dim with m = action_dim.
struct LocalAdvantage {
  double value = 0.0;
  Vec h;
  Mat d;
};

/// Q(x, u) = V(x) - || h(x) + d(x) u ||, with slowly tracking target copies.
class QModel {
 public:
  QModel() = default;
  QModel(int state_dim, int action_dim, const std::vector<int>& hidden, std::mt19937_64& rng);
  /// Wraps existing online networks; targets start as copies.
  QModel(Mlp v, Mlp h, Mlp d, Normalizer normalizer, int action_dim);

  [[nodiscard]] int state_dim() const { return v_.input_size(); }
  [[nodiscard]] int action_dim() const { return action_dim_; }

  [[nodiscard]] LocalAdvantage local(const State& x) const;
  [[nodiscard]] LocalAdvantage local_target(const State& x) const;

  [[nodiscard]] double value(const State& x) const;
  [[nodiscard]] double q_value(const State& x, const Action& u) const;

  [[nodiscard]] const Normalizer& normalizer() const { return normalizer_; }
  void set_normalizer(Normalizer n);

  Mlp& v_net() { return v_; }
  Mlp& h_net() { return h_; }
  Mlp& d_net() { return d_; }
  [[nodiscard]] const Mlp& v_net() const { return v_; }
  [[nodiscard]] const Mlp& h_net() const { return h_; }
  [[nodiscard]] const Mlp& d_net() const { return d_; }
  Mlp& v_target() { return vt_; }
  Mlp& h_target() { return ht_; }
  Mlp& d_target() { return dt_; }
  [[nodiscard]] const Mlp& v_target() const { return vt_; }
  [[nodiscard]] const Mlp& h_target() const { return ht_; }
  [[nodiscard]] const Mlp& d_target() const { return dt_; }

  /// Soft update of all three targets toward the online networks.
  void update_targets(double tau);

 private:
  [[nodiscard]] LocalAdvantage evaluate(const Mlp& v, const Mlp& h, const Mlp& d, const State& x) const;

  Mlp v_, h_, d_;
  Mlp vt_, ht_, dt_;
  Normalizer normalizer_;
  int action_dim_ = 0;
};

/// Q'(x') evaluated at the greedy pseudo-inverse action of the target
/// networks, clipped to `bounds`. Falls back to V'(x') when ||d'|| < kEpsD.
[[nodiscard]] double greedy_target_q(const QModel& q, const State& x_next, const ActionBounds& bounds);

struct LongTermLossOptions {
  double gamma = 0.999;
  /// Mean squared Bellman residual instead of the mean absolute residual.
  bool squared = false;
};

/// L2 = mean_i | y_i - Q(x_i, u_i) |, y_i = r_i + gamma Q'(x_{i+1}) (y_i = r_i on terminals).
[[nodiscard]] double long_term_loss(const QModel& q, std::span<const Transition> batch, const ActionBounds& bounds,
                                    const LongTermLossOptions& options);

struct LongTermGradients {
  double loss = 0.0;
  MlpGradients v;
  MlpGradients h;
  MlpGradients d;
};

[[nodiscard]] LongTermGradients long_term_gradients(const QModel& q, std::span<const Transition* const> batch,
                                                    const ActionBounds& bounds, const LongTermLossOptions& options);

}  // namespace llql
