#include "llql/nn.hpp"

#include <cmath>
#include <string>

#include "llql/errors.hpp"

namespace llql {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw InvalidInput("an Mlp needs at least an input and an output layer");
  for (int s : sizes) {
    if (s < 1) throw InvalidInput("layer sizes must be positive");
  }
}

}  // namespace

bool MlpGradients::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

Mlp::Mlp(std::vector<int> layer_sizes, std::mt19937_64& rng) : sizes_(std::move(layer_sizes)) {
  check_sizes(sizes_);
  layers_.reserve(sizes_.size() - 1);
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[i]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Mat(sizes_[i + 1], sizes_[i]), Vec::Zero(sizes_[i + 1])};
    // Row-major fill keeps the draw order independent of Eigen's storage.
    for (int r = 0; r < layer.weight.rows(); ++r) {
      for (int c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
    layers_.push_back(std::move(layer));
  }
}

Mlp Mlp::zeros(std::vector<int> layer_sizes) {
  check_sizes(layer_sizes);
  Mlp net;
  net.sizes_ = std::move(layer_sizes);
  for (std::size_t i = 0; i + 1 < net.sizes_.size(); ++i) {
    net.layers_.push_back({Mat::Zero(net.sizes_[i + 1], net.sizes_[i]), Vec::Zero(net.sizes_[i + 1])});
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vec Mlp::forward(const Vec& input) const {
  Mat batch = input;
  return forward(batch).col(0);
}

Mat Mlp::forward(const Mat& batch) const {
  if (batch.rows() != input_size()) {
    throw DimensionMismatch("Mlp input has " + std::to_string(batch.rows()) + " rows, expected " +
                            std::to_string(input_size()));
  }
  Mat a = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Mat z = layers_[i].weight * a;
    z.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Mat Mlp::forward(const Mat& batch, ForwardTape& tape) const {
  if (batch.rows() != input_size()) {
    throw DimensionMismatch("Mlp input has " + std::to_string(batch.rows()) + " rows, expected " +
                            std::to_string(input_size()));
  }
  tape.activations.clear();
  tape.activations.reserve(layers_.size() + 1);
  tape.activations.push_back(batch);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Mat z = layers_[i].weight * tape.activations.back();
    z.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
    tape.activations.push_back(std::move(z));
  }
  return tape.activations.back();
}

MlpGradients Mlp::backward(const ForwardTape& tape, const Mat& output_gradient) const {
  if (tape.activations.size() != layers_.size() + 1) {
    throw DimensionMismatch("forward tape does not belong to this network");
  }
  const auto batch = tape.activations.front().cols();
  if (output_gradient.rows() != output_size() || output_gradient.cols() != batch) {
    throw DimensionMismatch("output gradient shape does not match the forward batch");
  }
  MlpGradients g;
  g.layers.resize(layers_.size());
  Mat delta = output_gradient;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Mat& in = tape.activations[i];
    g.layers[i].weight.noalias() = delta * in.transpose();
    g.layers[i].bias = delta.rowwise().sum();
    Mat back = layers_[i].weight.transpose() * delta;
    if (i > 0) {
      // Hidden activations are ReLU outputs: positive exactly where the
      // pre-activation was positive.
      back = (in.array() > 0.0).select(back, 0.0);
    }
    delta = std::move(back);
  }
  g.input = std::move(delta);
  return g;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    for (int r = 0; r < l.weight.rows(); ++r) {
      for (int c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
    }
    for (int r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

void Mlp::assign(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    throw DimensionMismatch("parameter vector has " + std::to_string(params.size()) + " entries, expected " +
                            std::to_string(parameter_count()));
  }
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (int r = 0; r < l.weight.rows(); ++r) {
      for (int c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = params[k++];
    }
    for (int r = 0; r < l.bias.size(); ++r) l.bias(r) = params[k++];
  }
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.sizes_ != b.sizes_) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    if (a.layers_[i].weight != b.layers_[i].weight || a.layers_[i].bias != b.layers_[i].bias) return false;
  }
  return true;
}

// ------------------------------------------------------------------------ Adam

Adam::Adam(const Mlp& net, AdamConfig config) : config_(config) {
  for (const auto& l : net.layers()) {
    m_.push_back({Mat::Zero(l.weight.rows(), l.weight.cols()), Vec::Zero(l.bias.size())});
    v_.push_back({Mat::Zero(l.weight.rows(), l.weight.cols()), Vec::Zero(l.bias.size())});
  }
}

void Adam::step(Mlp& net, const MlpGradients& grads, const char* context) {
  if (grads.layers.size() != m_.size()) throw DimensionMismatch("gradient layer count does not match optimizer");
  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (grads.layers[i].weight.rows() != m_[i].weight.rows() || grads.layers[i].weight.cols() != m_[i].weight.cols() ||
        grads.layers[i].bias.size() != m_[i].bias.size()) {
      throw DimensionMismatch("gradient shape does not match optimizer state");
    }
  }
  if (!grads.all_finite()) {
    throw NonFiniteValue(std::string("non-finite gradient while minimizing ") + context + " at optimizer step " +
                         std::to_string(steps_));
  }
  const double lr = config_.lr.at(steps_);
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double step_size = lr * std::sqrt(c2) / c1;
  const double eps = config_.epsilon * std::sqrt(c2);

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= step_size * m.array() / (v.array().sqrt() + eps);
  };
  for (std::size_t i = 0; i < m_.size(); ++i) {
    auto& layer = net.layers()[i];
    update(layer.weight, m_[i].weight, v_[i].weight, grads.layers[i].weight);
    update(layer.bias, m_[i].bias, v_[i].bias, grads.layers[i].bias);
  }
}

void soft_update(Mlp& target, const Mlp& source, double tau) {
  if (!target.same_architecture(source)) throw DimensionMismatch("soft_update: architectures differ");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidInput("soft_update: tau must lie in [0, 1]");
  for (std::size_t i = 0; i < target.layers().size(); ++i) {
    auto& t = target.layers()[i];
    const auto& s = source.layers()[i];
    t.weight = tau * s.weight + (1.0 - tau) * t.weight;
    t.bias = tau * s.bias + (1.0 - tau) * t.bias;
  }
}

// ------------------------------------------------------------------ Normalizer

Normalizer Normalizer::identity(int dim) { return {Vec::Zero(dim), Vec::Ones(dim)}; }

Normalizer Normalizer::fit(const Mat& samples) {
  if (samples.cols() < 2) throw InvalidInput("fitting a normalizer needs at least 2 samples");
  Normalizer n;
  n.mean = samples.rowwise().mean();
  const Mat centered = samples.colwise() - n.mean;
  n.std = (centered.array().square().rowwise().sum() / static_cast<double>(samples.cols())).sqrt();
  n.std = n.std.cwiseMax(kMinStd);
  return n;
}

Vec Normalizer::apply(const Vec& x) const {
  if (x.size() != mean.size()) throw DimensionMismatch("normalizer dimension mismatch");
  return (x - mean).cwiseQuotient(std);
}

Mat Normalizer::apply(const Mat& batch) const {
  if (batch.rows() != mean.size()) throw DimensionMismatch("normalizer dimension mismatch");
  return (batch.colwise() - mean).array().colwise() / std.array();
}

}  // namespace llql
