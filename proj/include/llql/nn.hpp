#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "llql/types.hpp"

namespace llql {

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;    // out
};

/// Gradients of a scalar objective with respect to an Mlp's parameters,
/// summed over the batch, plus the gradient with respect to the inputs.
struct MlpGradients {
  std::vector<DenseLayer> layers;
  Mat input;

  [[nodiscard]] bool all_finite() const;
};

/// Activations recorded by a forward pass, consumed by backward.
struct ForwardTape {
  std::vector<Mat> activations;  // activations[0] is the input batch
};

/// Dense feed-forward network: ReLU on hidden layers, identity output.
/// Batches are matrices with one sample per column.
class Mlp {
 public:
  Mlp() = default;
  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  Mlp(std::vector<int> layer_sizes, std::mt19937_64& rng);
  /// All parameters zero.
  [[nodiscard]] static Mlp zeros(std::vector<int> layer_sizes);

  [[nodiscard]] const std::vector<int>& layer_sizes() const { return sizes_; }
  [[nodiscard]] int input_size() const { return sizes_.front(); }
  [[nodiscard]] int output_size() const { return sizes_.back(); }
  [[nodiscard]] std::size_t parameter_count() const;

  [[nodiscard]] std::vector<DenseLayer>& layers() { return layers_; }
  [[nodiscard]] const std::vector<DenseLayer>& layers() const { return layers_; }

  [[nodiscard]] Vec forward(const Vec& input) const;
  [[nodiscard]] Mat forward(const Mat& batch) const;
  [[nodiscard]] Mat forward(const Mat& batch, ForwardTape& tape) const;

  /// Backpropagates `output_gradient` (one column per sample) through the
  /// activations recorded in `tape`. The ReLU subgradient at 0 is 0.
  [[nodiscard]] MlpGradients backward(const ForwardTape& tape, const Mat& output_gradient) const;

  [[nodiscard]] bool same_architecture(const Mlp& other) const { return sizes_ == other.sizes_; }
  [[nodiscard]] bool all_finite() const;

  /// Flattened parameters: for each layer, weights row-major then bias.
  [[nodiscard]] std::vector<double> flatten() const;
  void assign(std::span<const double> params);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<int> sizes_;
  std::vector<DenseLayer> layers_;
};

/// Piecewise-constant learning rate: `initial` until `switch_step` updates
/// have been applied, `after` from then on. switch_step < 0 disables the switch.
struct LearningRateSchedule {
  double initial = 1e-3;
  long long switch_step = -1;
  double after = 1e-3;

  [[nodiscard]] double at(long long step) const {
    return (switch_step >= 0 && step >= switch_step) ? after : initial;
  }
};

struct AdamConfig {
  LearningRateSchedule lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive moment estimation state for one network.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, AdamConfig config);

  /// Applies one update. Throws NonFiniteValue (leaving `net` untouched)
  /// if any gradient is NaN/Inf; `context` names the loss for the message.
  void step(Mlp& net, const MlpGradients& grads, const char* context = "loss");

  [[nodiscard]] long long steps() const { return steps_; }
  [[nodiscard]] const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
  long long steps_ = 0;
};

/// target <- tau * source + (1 - tau) * target, parameter-wise.
void soft_update(Mlp& target, const Mlp& source, double tau);

/// Per-dimension affine standardization of states.
struct Normalizer {
  static constexpr double kMinStd = 1e-6;

  Vec mean;
  Vec std;

  [[nodiscard]] static Normalizer identity(int dim);
  /// Population statistics over the columns of `samples` (>= 2 columns).
  [[nodiscard]] static Normalizer fit(const Mat& samples);

  [[nodiscard]] Vec apply(const Vec& x) const;
  [[nodiscard]] Mat apply(const Mat& batch) const;
  [[nodiscard]] int dim() const { return static_cast<int>(mean.size()); }
};

}  // namespace llql
