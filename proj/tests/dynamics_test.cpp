#include <vector>

#include <gtest/gtest.h>

#include "llql/dynamics.hpp"
#include "llql/errors.hpp"
#include "test_util.hpp"

namespace llql {
namespace {

using testing::mat1;
using testing::vec;

TEST(PredictNext, ZeroStepReturnsState) {
  DynamicsModel dyn = testing::constant_dynamics(vec({1.0, -2.0}), Mat::Ones(2, 1), 0.001);
  dyn.set_delta(0.0);
  const State x = vec({0.3, -0.7});
  EXPECT_EQ(dyn.predict_next(x, vec({5.0})), x);
}

TEST(PredictNext, DriftOnlyWithoutAction) {
  const DynamicsModel dyn = testing::constant_dynamics(vec({1.0, -2.0}), Mat::Ones(2, 1), 0.001);
  const State p = dyn.predict_next(vec({0.3, -0.7}), vec({0.0}));
  EXPECT_DOUBLE_EQ(p(0), 0.3 + 0.001);
  EXPECT_DOUBLE_EQ(p(1), -0.7 - 0.002);
}

TEST(PredictNext, HandSetScalarModel) {
  const DynamicsModel dyn = testing::constant_dynamics(vec({1.0}), mat1(2.0), 0.001);
  EXPECT_NEAR(dyn.predict_next(vec({0.5}), vec({3.0}))(0), 0.507, 1e-15);
}

TEST(PredictNext, RowMajorControlMatrix) {
  Mat g(2, 2);
  g << 1.0, 2.0, 3.0, 4.0;
  const DynamicsModel dyn = testing::constant_dynamics(Vec::Zero(2), g, 1.0);
  const LocalDynamics ld = dyn.local(vec({0.0, 0.0}));
  EXPECT_EQ(ld.g, g);
  const State p = dyn.predict_next(vec({0.0, 0.0}), vec({1.0, -1.0}));
  EXPECT_DOUBLE_EQ(p(0), -1.0);
  EXPECT_DOUBLE_EQ(p(1), -1.0);
}

TEST(PredictNext, BatchMatchesSingle) {
  std::mt19937_64 rng(1);
  const DynamicsModel dyn(2, 1, 0.01, {8}, rng);
  const Mat xs = testing::random_mat(2, 6, rng);
  const Mat us = testing::random_mat(1, 6, rng);
  const Mat out = dyn.predict_next(xs, us);
  for (int i = 0; i < 6; ++i) {
    EXPECT_TRUE(out.col(i).isApprox(dyn.predict_next(Vec(xs.col(i)), Vec(us.col(i))), 1e-14));
  }
}

TEST(PredictNext, RejectsWrongDimensions) {
  const DynamicsModel dyn = testing::constant_dynamics(vec({1.0}), mat1(2.0), 0.001);
  EXPECT_THROW((void)dyn.predict_next(vec({0.0, 1.0}), vec({0.0})), DimensionMismatch);
  EXPECT_THROW((void)dyn.predict_next(vec({0.0}), vec({0.0, 1.0})), DimensionMismatch);
}

TEST(ShortTermLoss, PerfectModelIsZero) {
  const DynamicsModel dyn = testing::constant_dynamics(vec({1.0}), mat1(2.0), 0.001);
  std::vector<Transition> batch;
  for (double u : {-1.0, 0.0, 0.5}) {
    const State x = vec({u * 0.1});
    batch.push_back({x, vec({u}), dyn.predict_next(x, vec({u})), 0.0, false});
  }
  EXPECT_EQ(short_term_loss(dyn, batch), 0.0);
}

TEST(ShortTermLoss, SingleResidualNorm) {
  const DynamicsModel dyn = testing::constant_dynamics(Vec::Zero(2), Mat::Zero(2, 1), 0.001);
  const std::vector<Transition> batch{{vec({0.0, 0.0}), vec({0.0}), vec({0.3, 0.4}), 0.0, false}};
  EXPECT_NEAR(short_term_loss(dyn, batch), 0.5, 1e-15);
}

TEST(ShortTermLoss, MeanOverBatch) {
  const DynamicsModel dyn = testing::constant_dynamics(Vec::Zero(2), Mat::Zero(2, 1), 0.001);
  const std::vector<Transition> batch{{vec({0.0, 0.0}), vec({0.0}), vec({0.3, 0.4}), 0.0, false},
                                      {vec({0.0, 0.0}), vec({0.0}), vec({0.9, 1.2}), 0.0, false}};
  EXPECT_NEAR(short_term_loss(dyn, batch), 1.0, 1e-15);
}

TEST(ShortTermLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    DynamicsModel dyn(2, 2, 0.5, {6, 5}, rng);
    std::vector<Transition> batch;
    for (int i = 0; i < 7; ++i) {
      batch.push_back({testing::random_vec(2, rng), testing::random_vec(2, rng), testing::random_vec(2, rng), 0.0,
                       false});
    }
    std::vector<const Transition*> ptrs;
    for (const auto& t : batch) ptrs.push_back(&t);
    const ShortTermGradients g = short_term_gradients(dyn, ptrs);
    EXPECT_NEAR(g.loss, short_term_loss(dyn, batch), 1e-14);
    auto objective = [&] { return short_term_loss(dyn, batch); };
    EXPECT_LT(testing::max_fd_error(dyn.f_net(), g.f, objective), 1e-5);
    EXPECT_LT(testing::max_fd_error(dyn.g_net(), g.g, objective), 1e-5);
  }
}

}  // namespace
}  // namespace llql
