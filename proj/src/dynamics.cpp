#include "llql/dynamics.hpp"

#include <cmath>
#include <string>

#include "llql/errors.hpp"

namespace llql {

namespace {

std::vector<int> sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

void pack(std::span<const Transition* const> batch, int sd, int ad, Mat& x, Mat& u, Mat& xn) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  x.resize(sd, n);
  u.resize(ad, n);
  xn.resize(sd, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    if (t.x.size() != sd || t.x_next.size() != sd || t.u.size() != ad) {
      throw DimensionMismatch("transition dimensions do not match the dynamics model");
    }
    x.col(i) = t.x;
    u.col(i) = t.u;
    xn.col(i) = t.x_next;
  }
}

// Adds g(x) u per column, with g stored row-major in gout (sd*ad x n).
Mat apply_gain(const Mat& gout, const Mat& u, int sd, int ad) {
  Mat out = Mat::Zero(sd, u.cols());
  for (int j = 0; j < sd; ++j) {
    for (int k = 0; k < ad; ++k) out.row(j).array() += gout.row(j * ad + k).array() * u.row(k).array();
  }
  return out;
}

}  // namespace

DynamicsModel::DynamicsModel(int state_dim, int action_dim, double delta, const std::vector<int>& hidden,
                             std::mt19937_64& rng)
    : f_(sizes(state_dim, hidden, state_dim), rng),
      g_(sizes(state_dim, hidden, state_dim * action_dim), rng),
      delta_(delta),
      normalizer_(Normalizer::identity(state_dim)),
      action_dim_(action_dim) {
  if (!(delta > 0.0)) throw InvalidInput("delta must be positive");
}

DynamicsModel::DynamicsModel(Mlp f, Mlp g, double delta, Normalizer normalizer, int action_dim)
    : f_(std::move(f)), g_(std::move(g)), delta_(delta), normalizer_(std::move(normalizer)), action_dim_(action_dim) {
  const int sd = f_.output_size();
  if (f_.input_size() != sd || g_.input_size() != sd || g_.output_size() != sd * action_dim ||
      normalizer_.dim() != sd) {
    throw DimensionMismatch("f/g networks do not form a dynamics model for state_dim " + std::to_string(sd));
  }
}

void DynamicsModel::set_normalizer(Normalizer n) {
  if (n.dim() != state_dim()) throw DimensionMismatch("normalizer dimension mismatch");
  normalizer_ = std::move(n);
}

LocalDynamics DynamicsModel::local(const State& x) const {
  if (x.size() != state_dim()) throw DimensionMismatch("state dimension mismatch in dynamics model");
  const Vec z = normalizer_.apply(x);
  LocalDynamics ld;
  ld.f = f_.forward(z);
  const Vec gflat = g_.forward(z);
  ld.g = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      gflat.data(), state_dim(), action_dim_);
  ld.delta = delta_;
  return ld;
}

State DynamicsModel::predict_next(const State& x, const Action& u) const {
  if (u.size() != action_dim_) throw DimensionMismatch("action dimension mismatch in dynamics model");
  const LocalDynamics ld = local(x);
  return x + delta_ * (ld.f + ld.g * u);
}

Mat DynamicsModel::predict_next(const Mat& states, const Mat& actions) const {
  if (states.rows() != state_dim() || actions.rows() != action_dim_ || states.cols() != actions.cols()) {
    throw DimensionMismatch("batched prediction shape mismatch");
  }
  const Mat z = normalizer_.apply(states);
  const Mat f = f_.forward(z);
  const Mat g = g_.forward(z);
  return states + delta_ * (f + apply_gain(g, actions, state_dim(), action_dim_));
}

double short_term_loss(const DynamicsModel& model, std::span<const Transition> batch) {
  if (batch.empty()) throw InvalidInput("short-term loss needs a non-empty batch");
  std::vector<const Transition*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& t : batch) ptrs.push_back(&t);
  Mat x, u, xn;
  pack(ptrs, model.state_dim(), model.action_dim(), x, u, xn);
  const Mat residual = xn - model.predict_next(x, u);
  return residual.colwise().norm().mean();
}

ShortTermGradients short_term_gradients(const DynamicsModel& model, std::span<const Transition* const> batch) {
  if (batch.empty()) throw InvalidInput("short-term loss needs a non-empty batch");
  const int sd = model.state_dim();
  const int ad = model.action_dim();
  Mat x, u, xn;
  pack(batch, sd, ad, x, u, xn);
  const Mat z = model.normalizer().apply(x);
  ForwardTape ftape, gtape;
  const Mat f = model.f_net().forward(z, ftape);
  const Mat g = model.g_net().forward(z, gtape);
  const double delta = model.delta();
  const Mat residual = xn - x - delta * (f + apply_gain(g, u, sd, ad));
  const Eigen::RowVectorXd norms = residual.colwise().norm();
  const double n = static_cast<double>(batch.size());

  // d||e||/de = e/||e||; zero residual contributes a zero subgradient.
  Mat de = residual;
  for (Eigen::Index i = 0; i < de.cols(); ++i) {
    if (norms(i) > 0.0) {
      de.col(i) /= norms(i) * n;
    } else {
      de.col(i).setZero();
    }
  }
  const Mat df = -delta * de;
  Mat dg(sd * ad, de.cols());
  for (int j = 0; j < sd; ++j) {
    for (int k = 0; k < ad; ++k) dg.row(j * ad + k) = df.row(j).cwiseProduct(u.row(k));
  }
  ShortTermGradients out;
  out.loss = norms.mean();
  out.f = model.f_net().backward(ftape, df);
  out.g = model.g_net().backward(gtape, dg);
  return out;
}

}  // namespace llql
