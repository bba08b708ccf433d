#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "llql/errors.hpp"
#include "llql/nn.hpp"
#include "test_util.hpp"

namespace llql {
namespace {

using testing::vec;

Mlp hand_net() {
  Mlp net = Mlp::zeros({2, 2, 1});
  net.layers()[0].weight << 1.0, -1.0, 2.0, 0.5;
  net.layers()[0].bias << 0.5, -1.0;
  net.layers()[1].weight << 3.0, -2.0;
  net.layers()[1].bias << 0.25;
  return net;
}

/// Central finite-difference check of backward() for one random network.
double max_fd_error(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> width(1, 6);
  std::vector<int> sizes{width(rng)};
  const int hidden = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int i = 0; i < hidden; ++i) sizes.push_back(width(rng));
  sizes.push_back(width(rng));
  Mlp net(sizes, rng);
  for (auto& l : net.layers()) l.bias = testing::random_vec(static_cast<int>(l.bias.size()), rng, 0.5);
  const Mat x = testing::random_mat(sizes.front(), 3, rng, 2.0);
  const Mat w = testing::random_mat(sizes.back(), 3, rng);
  auto objective = [&](const Mlp& n) { return (n.forward(x).array() * w.array()).sum(); };

  ForwardTape tape;
  (void)net.forward(x, tape);
  const MlpGradients g = net.backward(tape, w);
  std::vector<double> analytic;
  for (const auto& l : g.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) analytic.push_back(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) analytic.push_back(l.bias(r));
  }
  std::vector<double> params = net.flatten();
  EXPECT_EQ(params.size(), analytic.size());
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mlp plus = net, minus = net;
    auto p = params, m = params;
    p[i] += h;
    m[i] -= h;
    plus.assign(p);
    minus.assign(m);
    const double fd = (objective(plus) - objective(minus)) / (2 * h);
    const double err = std::abs(fd - analytic[i]) / std::max(1.0, std::abs(fd) + std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  // Input gradient as well.
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Mat xp = x, xm = x;
      xp(r, c) += h;
      xm(r, c) -= h;
      const double fd = ((net.forward(xp).array() - net.forward(xm).array()) * w.array()).sum() / (2 * h);
      worst = std::max(worst, std::abs(fd - g.input(r, c)) / std::max(1.0, std::abs(fd)));
    }
  }
  return worst;
}

TEST(Mlp, ZeroNetworkOutputsZero) {
  const Mlp net = Mlp::zeros({3, 4, 2});
  EXPECT_EQ(net.forward(vec({1.0, -2.0, 3.0})), Vec::Zero(2));
}

TEST(Mlp, IdentityLayer) {
  Mlp net = Mlp::zeros({3, 3});
  net.layers()[0].weight.setIdentity();
  const Vec v = vec({0.3, -1.5, 2.0});
  EXPECT_EQ(net.forward(v), v);
}

TEST(Mlp, HandSetTwoTwoOneNetwork) {
  // z1 = (1 - 2 + 0.5, 2 + 1 - 1) = (-0.5, 2) -> relu (0, 2) -> 3*0 - 2*2 + 0.25
  EXPECT_DOUBLE_EQ(hand_net().forward(vec({1.0, 2.0}))(0), -3.75);
}

TEST(Mlp, RejectsWrongInputSize) {
  EXPECT_THROW((void)hand_net().forward(vec({1.0})), DimensionMismatch);
}

TEST(Mlp, InitializationScale) {
  std::mt19937_64 rng(1);
  const Mlp net({4, 200, 200, 3}, rng);
  EXPECT_LE(net.layers()[0].weight.cwiseAbs().maxCoeff(), 0.5);
  EXPECT_LE(net.layers()[1].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(200.0));
  EXPECT_EQ(net.layers()[1].bias, Vec::Zero(200));
  std::mt19937_64 rng2(1);
  EXPECT_TRUE(net == Mlp({4, 200, 200, 3}, rng2));
}

TEST(Mlp, BatchMatchesPerSample) {
  std::mt19937_64 rng(2);
  const Mlp net({3, 8, 2}, rng);
  const Mat x = testing::random_mat(3, 5, rng);
  const Mat y = net.forward(x);
  for (int c = 0; c < 5; ++c) EXPECT_TRUE(y.col(c).isApprox(net.forward(Vec(x.col(c))), 1e-14));
}

TEST(Backward, ZeroOutputGradientGivesZeroGradients) {
  std::mt19937_64 rng(3);
  const Mlp net({3, 5, 2}, rng);
  ForwardTape tape;
  (void)net.forward(testing::random_mat(3, 4, rng), tape);
  const MlpGradients g = net.backward(tape, Mat::Zero(2, 4));
  for (const auto& l : g.layers) {
    EXPECT_EQ(l.weight.norm(), 0.0);
    EXPECT_EQ(l.bias.norm(), 0.0);
  }
  EXPECT_EQ(g.input.norm(), 0.0);
}

TEST(Backward, ScalarLinearNetwork) {
  Mlp net = Mlp::zeros({1, 1});
  net.layers()[0].weight(0, 0) = 2.0;
  net.layers()[0].bias(0) = 1.0;
  ForwardTape tape;
  (void)net.forward(Mat::Constant(1, 1, 3.0), tape);
  const MlpGradients g = net.backward(tape, Mat::Constant(1, 1, 1.0));
  EXPECT_EQ(g.layers[0].weight(0, 0), 3.0);
  EXPECT_EQ(g.layers[0].bias(0), 1.0);
  EXPECT_EQ(g.input(0, 0), 2.0);
}

TEST(Backward, RectifierSubgradientAtZeroIsZero) {
  Mlp net = Mlp::zeros({1, 1, 1});
  net.layers()[1].weight(0, 0) = 1.0;  // hidden pre-activation is exactly 0
  ForwardTape tape;
  (void)net.forward(Mat::Constant(1, 1, 0.7), tape);
  const MlpGradients g = net.backward(tape, Mat::Constant(1, 1, 1.0));
  EXPECT_EQ(g.layers[0].weight(0, 0), 0.0);
  EXPECT_EQ(g.layers[0].bias(0), 0.0);
}

TEST(Backward, MatchesCentralFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) ASSERT_LT(max_fd_error(rng), 1e-4) << "network " << i;
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::mt19937_64 rng(5);
  Mlp net({2, 3, 1}, rng);
  const Mlp before = net;
  Adam opt(net, {});
  MlpGradients g;
  for (const auto& l : net.layers()) g.layers.push_back({Mat::Zero(l.weight.rows(), l.weight.cols()), Vec::Zero(l.bias.size())});
  opt.step(net, g);
  EXPECT_TRUE(net == before);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, MovesAgainstTheGradient) {
  Mlp net = Mlp::zeros({1, 1});
  Adam opt(net, {{0.1, -1, 0.1}});
  MlpGradients g{{{Mat::Constant(1, 1, 2.0), Vec::Constant(1, -3.0)}}, Mat()};
  opt.step(net, g);
  EXPECT_LT(net.layers()[0].weight(0, 0), 0.0);
  EXPECT_GT(net.layers()[0].bias(0), 0.0);
}

TEST(Adam, QuadraticDescentIncreasesMonotonically) {
  // f(w) = (w - 3)^2 from w = 0 with lr 0.1; the first Adam step has size lr.
  Mlp net = Mlp::zeros({1, 1});
  Adam opt(net, {{0.1, -1, 0.1}});
  double prev = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double b = net.layers()[0].bias(0);
    MlpGradients g{{{Mat::Zero(1, 1), Vec::Constant(1, 2.0 * (b - 3.0))}}, Mat()};
    opt.step(net, g);
    const double now = net.layers()[0].bias(0);
    EXPECT_GT(now, prev);
    EXPECT_LT(now, 3.0);
    if (i == 0) {
      EXPECT_NEAR(now, 0.1, 1e-6);
    }
    prev = now;
  }
}

TEST(Adam, LearningRateSchedule) {
  const LearningRateSchedule s{1e-3, 100, 1e-4};
  EXPECT_EQ(s.at(0), 1e-3);
  EXPECT_EQ(s.at(99), 1e-3);
  EXPECT_EQ(s.at(100), 1e-4);
  EXPECT_EQ((LearningRateSchedule{1e-3, -1, 1e-4}.at(1'000'000)), 1e-3);
}

TEST(Adam, RejectsNonFiniteGradientsWithoutTouchingTheNet) {
  std::mt19937_64 rng(6);
  Mlp net({1, 2, 1}, rng);
  const Mlp before = net;
  Adam opt(net, {});
  MlpGradients g;
  for (const auto& l : net.layers()) g.layers.push_back({Mat::Zero(l.weight.rows(), l.weight.cols()), Vec::Zero(l.bias.size())});
  g.layers[1].bias(0) = std::nan("");
  try {
    opt.step(net, g, "L2 (V)");
    FAIL() << "expected NonFiniteValue";
  } catch (const NonFiniteValue& e) {
    EXPECT_NE(std::string(e.what()).find("L2 (V)"), std::string::npos);
  }
  EXPECT_TRUE(net == before);
  EXPECT_EQ(opt.steps(), 0);
}

TEST(SoftUpdate, Endpoints) {
  std::mt19937_64 rng(7);
  const Mlp source({2, 3, 1}, rng);
  Mlp target({2, 3, 1}, rng);
  const Mlp original = target;
  soft_update(target, source, 0.0);
  EXPECT_TRUE(target == original);
  soft_update(target, source, 1.0);
  EXPECT_TRUE(target == source);
}

TEST(SoftUpdate, ScalarArithmetic) {
  Mlp target = testing::constant_net(1, 2.0);
  const Mlp source = testing::constant_net(1, 4.0);
  soft_update(target, source, 0.25);
  EXPECT_DOUBLE_EQ(target.layers().back().bias(0), 2.5);
}

TEST(SoftUpdate, ContractsGeometrically) {
  std::mt19937_64 rng(8);
  const Mlp source({2, 4, 2}, rng);
  Mlp target({2, 4, 2}, rng);
  auto dist = [&] {
    const auto a = target.flatten(), b = source.flatten();
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  const double d0 = dist();
  for (int n = 0; n < 50; ++n) soft_update(target, source, 0.1);
  EXPECT_NEAR(dist(), d0 * std::pow(0.9, 50), 1e-9);
}

TEST(SoftUpdate, RejectsMismatchedArchitecturesAndBadTau) {
  std::mt19937_64 rng(9);
  Mlp a({2, 3, 1}, rng);
  const Mlp b({2, 4, 1}, rng);
  EXPECT_THROW(soft_update(a, b, 0.5), DimensionMismatch);
  EXPECT_THROW(soft_update(a, a, 1.5), InvalidInput);
}

TEST(Normalizer, TwoPointStatistics) {
  const Normalizer n = Normalizer::fit(Mat{{0.0, 2.0}});
  EXPECT_DOUBLE_EQ(n.mean(0), 1.0);
  EXPECT_DOUBLE_EQ(n.std(0), 1.0);
  EXPECT_DOUBLE_EQ(n.apply(vec({0.0}))(0), -1.0);
}

TEST(Normalizer, ConstantSamplesAreFloored) {
  const Normalizer n = Normalizer::fit(Mat{{5.0, 5.0, 5.0}});
  EXPECT_EQ(n.std(0), Normalizer::kMinStd);
  EXPECT_EQ(n.apply(vec({5.0}))(0), 0.0);
}

TEST(Normalizer, FourPointStatistics) {
  const Normalizer n = Normalizer::fit(Mat{{1.0, 2.0, 3.0, 4.0}});
  EXPECT_DOUBLE_EQ(n.mean(0), 2.5);
  EXPECT_NEAR(n.std(0), 1.1180339887498949, 1e-15);
  EXPECT_NEAR(n.apply(vec({4.0}))(0), 1.3416407864998738, 1e-15);
}

TEST(Normalizer, StandardizesSamples) {
  std::mt19937_64 rng(10);
  Mat s = testing::random_mat(3, 500, rng, 4.0);
  s.row(1).array() += 7.0;
  const Normalizer n = Normalizer::fit(s);
  const Mat z = n.apply(s);
  for (int r = 0; r < 3; ++r) {
    const double mean = z.row(r).mean();
    const double sd = std::sqrt((z.row(r).array() - mean).square().mean());
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(sd, 1.0, 1e-6);
  }
}

TEST(Normalizer, NeedsTwoSamples) { EXPECT_THROW((void)Normalizer::fit(Mat{{1.0}}), InvalidInput); }

TEST(Mlp, FlattenAssignRoundTrip) {
  std::mt19937_64 rng(11);
  const Mlp net({3, 4, 2}, rng);
  Mlp copy = Mlp::zeros({3, 4, 2});
  copy.assign(net.flatten());
  EXPECT_TRUE(copy == net);
  EXPECT_EQ(net.parameter_count(), 3u * 4 + 4 + 4 * 2 + 2);
  EXPECT_THROW(copy.assign(std::vector<double>(3)), DimensionMismatch);
}

}  // namespace
}  // namespace llql
