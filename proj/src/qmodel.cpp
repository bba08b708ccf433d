#include "llql/qmodel.hpp"

#include <cmath>

#include "llql/errors.hpp"
#include "llql/lstsq.hpp"

namespace llql {

namespace {

using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<int> sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

Mat unflatten(const Eigen::Ref<const Vec>& flat, int rows, int cols) {
  return Eigen::Map<const RowMajorMat>(flat.data(), rows, cols);
}

// Advantage of the clipped greedy action for one column of target outputs.
double greedy_advantage(const Vec& h, const Mat& d, const ActionBounds& bounds) {
  const auto u = pseudo_inverse_action(d, h);
  if (!u) return 0.0;
  return -(h + d * bounds.clip(*u)).norm();
}

Eigen::RowVectorXd bellman_targets(const QModel& q, std::span<const Transition* const> batch,
                                   const ActionBounds& bounds, double gamma) {
  const int sd = q.state_dim();
  const int m = q.action_dim();
  const auto n = static_cast<Eigen::Index>(batch.size());
  Mat xn(sd, n);
  for (Eigen::Index i = 0; i < n; ++i) xn.col(i) = batch[static_cast<std::size_t>(i)]->x_next;
  const Mat z = q.normalizer().apply(xn);
  const Mat v = q.v_target().forward(z);
  const Mat h = q.h_target().forward(z);
  const Mat d = q.d_target().forward(z);
  Eigen::RowVectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    if (t.done) {
      y(i) = t.reward;
      continue;
    }
    const Vec hi = h.col(i);
    const double next_q = v(0, i) + greedy_advantage(hi, unflatten(d.col(i), m, m), bounds);
    y(i) = t.reward + gamma * next_q;
  }
  return y;
}

}  // namespace

QModel::QModel(int state_dim, int action_dim, const std::vector<int>& hidden, std::mt19937_64& rng)
    : v_(sizes(state_dim, hidden, 1), rng),
      h_(sizes(state_dim, hidden, action_dim), rng),
      d_(sizes(state_dim, hidden, action_dim * action_dim), rng),
      vt_(v_),
      ht_(h_),
      dt_(d_),
      normalizer_(Normalizer::identity(state_dim)),
      action_dim_(action_dim) {}

QModel::QModel(Mlp v, Mlp h, Mlp d, Normalizer normalizer, int action_dim)
    : v_(std::move(v)),
      h_(std::move(h)),
      d_(std::move(d)),
      vt_(v_),
      ht_(h_),
      dt_(d_),
      normalizer_(std::move(normalizer)),
      action_dim_(action_dim) {
  const int sd = v_.input_size();
  if (v_.output_size() != 1 || h_.input_size() != sd || d_.input_size() != sd || h_.output_size() != action_dim ||
      d_.output_size() != action_dim * action_dim || normalizer_.dim() != sd) {
    throw DimensionMismatch("V/h/d networks do not form a Q model");
  }
}

void QModel::set_normalizer(Normalizer n) {
  if (n.dim() != state_dim()) throw DimensionMismatch("normalizer dimension mismatch");
  normalizer_ = std::move(n);
}

LocalAdvantage QModel::evaluate(const Mlp& v, const Mlp& h, const Mlp& d, const State& x) const {
  if (x.size() != state_dim()) throw DimensionMismatch("state dimension mismatch in Q model");
  const Vec z = normalizer_.apply(x);
  LocalAdvantage la;
  la.value = v.forward(z)(0);
  la.h = h.forward(z);
  la.d = unflatten(d.forward(z), action_dim_, action_dim_);
  return la;
}

LocalAdvantage QModel::local(const State& x) const { return evaluate(v_, h_, d_, x); }
LocalAdvantage QModel::local_target(const State& x) const { return evaluate(vt_, ht_, dt_, x); }

double QModel::value(const State& x) const { return v_.forward(normalizer_.apply(x))(0); }

double QModel::q_value(const State& x, const Action& u) const {
  if (u.size() != action_dim_) throw DimensionMismatch("action dimension mismatch in Q model");
  const LocalAdvantage la = local(x);
  return la.value - (la.h + la.d * u).norm();
}

void QModel::update_targets(double tau) {
  soft_update(vt_, v_, tau);
  soft_update(ht_, h_, tau);
  soft_update(dt_, d_, tau);
}

double greedy_target_q(const QModel& q, const State& x_next, const ActionBounds& bounds) {
  const LocalAdvantage la = q.local_target(x_next);
  return la.value + greedy_advantage(la.h, la.d, bounds);
}

double long_term_loss(const QModel& q, std::span<const Transition> batch, const ActionBounds& bounds,
                      const LongTermLossOptions& options) {
  if (batch.empty()) throw InvalidInput("long-term loss needs a non-empty batch");
  std::vector<const Transition*> ptrs;
  for (const auto& t : batch) ptrs.push_back(&t);
  const Eigen::RowVectorXd y = bellman_targets(q, ptrs, bounds, options.gamma);
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double e = y(static_cast<Eigen::Index>(i)) - q.q_value(batch[i].x, batch[i].u);
    sum += options.squared ? e * e : std::abs(e);
  }
  return sum / static_cast<double>(batch.size());
}

LongTermGradients long_term_gradients(const QModel& q, std::span<const Transition* const> batch,
                                      const ActionBounds& bounds, const LongTermLossOptions& options) {
  if (batch.empty()) throw InvalidInput("long-term loss needs a non-empty batch");
  const int sd = q.state_dim();
  const int m = q.action_dim();
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Eigen::RowVectorXd y = bellman_targets(q, batch, bounds, options.gamma);

  Mat x(sd, n), u(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    if (t.x.size() != sd || t.u.size() != m) throw DimensionMismatch("transition dimensions do not match Q model");
    x.col(i) = t.x;
    u.col(i) = t.u;
  }
  const Mat z = q.normalizer().apply(x);
  ForwardTape vtape, htape, dtape;
  const Mat v = q.v_net().forward(z, vtape);
  const Mat h = q.h_net().forward(z, htape);
  const Mat d = q.d_net().forward(z, dtape);

  Mat dv(1, n), dh(m, n), dd(m * m, n);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Mat di = unflatten(d.col(i), m, m);
    const Vec r = h.col(i) + di * u.col(i);
    const double rn = r.norm();
    const double e = y(i) - (v(0, i) - rn);
    double dq;  // dL/dQ_i
    if (options.squared) {
      loss += e * e;
      dq = -2.0 * e * inv_n;
    } else {
      loss += std::abs(e);
      dq = -static_cast<double>((e > 0.0) - (e < 0.0)) * inv_n;
    }
    dv(0, i) = dq;
    // dQ/dr = -r/||r|| (zero subgradient at r = 0).
    const Vec dr = rn > 0.0 ? Vec(-dq * r / rn) : Vec::Zero(m);
    dh.col(i) = dr;
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) dd(j * m + k, i) = dr(j) * u(k, i);
    }
  }
  LongTermGradients out;
  out.loss = loss * inv_n;
  out.v = q.v_net().backward(vtape, dv);
  out.h = q.h_net().backward(htape, dh);
  out.d = q.d_net().backward(dtape, dd);
  return out;
}

}  // namespace llql
