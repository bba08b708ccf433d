#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "llql/dynamics.hpp"
#include "llql/nn.hpp"
#include "llql/qmodel.hpp"

namespace llql::testing {

/// in -> out network whose output is `value` for every input.
inline Mlp constant_net(int in, const Vec& value) {
  Mlp net = Mlp::zeros({in, 2, static_cast<int>(value.size())});
  net.layers().back().bias = value;
  return net;
}

inline Mlp constant_net(int in, double value) { return constant_net(in, Vec::Constant(1, value)); }

/// Dynamics with state-independent f and g (g given as a state_dim x action_dim matrix).
inline DynamicsModel constant_dynamics(const Vec& f, const Mat& g, double delta) {
  const int sd = static_cast<int>(f.size());
  const int ad = static_cast<int>(g.cols());
  Vec g_flat(sd * ad);
  for (int i = 0; i < sd; ++i) {
    for (int j = 0; j < ad; ++j) g_flat(i * ad + j) = g(i, j);
  }
  return DynamicsModel(constant_net(sd, f), constant_net(sd, g_flat), delta, Normalizer::identity(sd), ad);
}

/// Q model with state-independent V, h and d.
inline QModel constant_q(int state_dim, double v, const Vec& h, const Mat& d) {
  const int m = static_cast<int>(h.size());
  const int ad = static_cast<int>(d.cols());
  Vec d_flat(m * ad);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < ad; ++j) d_flat(i * ad + j) = d(i, j);
  }
  return QModel(constant_net(state_dim, v), constant_net(state_dim, h), constant_net(state_dim, d_flat),
                Normalizer::identity(state_dim), ad);
}

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Mat mat1(double v) { return Mat::Constant(1, 1, v); }

inline Vec random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline Mat random_mat(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  }
  return m;
}

/// Largest relative error between `grads` and central differences of
/// `objective` with respect to every parameter of `net` (mutated in place and
/// restored).
inline double max_fd_error(Mlp& net, const MlpGradients& grads, const std::function<double()>& objective,
                           double h = 1e-6) {
  std::vector<double> analytic;
  for (const auto& l : grads.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) analytic.push_back(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) analytic.push_back(l.bias(r));
  }
  const std::vector<double> base = net.flatten();
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto p = base;
    p[i] = base[i] + h;
    net.assign(p);
    const double plus = objective();
    p[i] = base[i] - h;
    net.assign(p);
    const double minus = objective();
    const double fd = (plus - minus) / (2 * h);
    worst = std::max(worst, std::abs(fd - analytic[i]) / std::max(1.0, std::abs(fd) + std::abs(analytic[i])));
  }
  net.assign(base);
  return worst;
}

}  // namespace llql::testing
