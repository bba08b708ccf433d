#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "llql/errors.hpp"
#include "llql/replay.hpp"
#include "test_util.hpp"

namespace llql {
namespace {

Transition tagged(double r) { return {testing::vec({r}), testing::vec({0.0}), testing::vec({r + 1}), r, false}; }

TEST(ReplayBuffer, KeepsInsertionOrderBelowCapacity) {
  ReplayBuffer buf(3, 0);
  buf.push(tagged(1));
  buf.push(tagged(2));
  EXPECT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf.at(0).reward, 1);
  EXPECT_EQ(buf.at(1).reward, 2);
}

TEST(ReplayBuffer, EvictsOldestWhenFull) {
  ReplayBuffer buf(3, 0);
  for (int i = 1; i <= 5; ++i) buf.push(tagged(i));
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).reward, 3);
  EXPECT_EQ(buf.at(1).reward, 4);
  EXPECT_EQ(buf.at(2).reward, 5);
  EXPECT_THROW((void)buf.at(3), InvalidInput);
}

TEST(ReplayBuffer, SampleIsUniformWithReplacement) {
  ReplayBuffer buf(4, 42);
  for (int i = 0; i < 4; ++i) buf.push(tagged(i));
  std::map<double, int> counts;
  const auto batch = buf.sample(40000);
  ASSERT_EQ(batch.size(), 40000u);
  for (const Transition* t : batch) ++counts[t->reward];
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [r, c] : counts) EXPECT_NEAR(c, 10000, 400) << r;
}

TEST(ReplayBuffer, SamplingIsSeedDeterministic) {
  ReplayBuffer a(10, 7), b(10, 7);
  for (int i = 0; i < 10; ++i) {
    a.push(tagged(i));
    b.push(tagged(i));
  }
  const auto sa = a.sample(50), sb = b.sample(50);
  for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_EQ(sa[i]->reward, sb[i]->reward);
}

TEST(ReplayBuffer, RejectsEmptySampleZeroCapacityAndNonFiniteReward) {
  ReplayBuffer buf(2, 0);
  EXPECT_THROW((void)buf.sample(1), InvalidInput);
  EXPECT_THROW(ReplayBuffer(0, 0), InvalidInput);
  EXPECT_THROW(buf.push(tagged(std::nan(""))), InvalidInput);
}

TEST(ExplorationNoise, DecaysOnlyAfterPositiveReturns) {
  ExplorationNoise n(0.5, 0.9, 0.1);
  n.end_episode(-1.0);
  EXPECT_EQ(n.sigma(), 0.5);
  n.end_episode(0.0);
  EXPECT_EQ(n.sigma(), 0.5);
  n.end_episode(3.0);
  EXPECT_DOUBLE_EQ(n.sigma(), 0.45);
  for (int i = 0; i < 100; ++i) n.end_episode(1.0);
  EXPECT_EQ(n.sigma(), 0.1);
}

TEST(ExplorationNoise, GaussianStatistics) {
  ExplorationNoise n(0.5, 1.0, 0.5);
  std::mt19937_64 rng(3);
  double sum = 0, sq = 0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double v = n.next(1, rng)(0);
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum / count, 0.0, 0.005);
  EXPECT_NEAR(std::sqrt(sq / count), 0.5, 0.005);
}

TEST(ExplorationNoise, OrnsteinUhlenbeckStationaryScaleAndReset) {
  // Stationary std of z <- (1 - theta) z + sigma e is sigma / sqrt(1 - (1 - theta)^2).
  ExplorationNoise n(0.5, 1.0, 0.5, NoiseKind::OrnsteinUhlenbeck, 0.15);
  std::mt19937_64 rng(4);
  n.begin_episode();
  for (int i = 0; i < 1000; ++i) (void)n.next(1, rng);
  double sq = 0;
  const int count = 400000;
  for (int i = 0; i < count; ++i) {
    const double v = n.next(1, rng)(0);
    sq += v * v;
  }
  EXPECT_NEAR(std::sqrt(sq / count), 0.5 / std::sqrt(1 - 0.85 * 0.85), 0.03);

  // After a reset the first value is a single innovation sigma * e.
  ExplorationNoise a(0.5, 1.0, 0.5, NoiseKind::OrnsteinUhlenbeck, 0.15);
  std::mt19937_64 ra(9), rb(9);
  (void)a.next(1, ra);
  a.begin_episode();
  (void)std::normal_distribution<double>(0.0, 1.0)(rb);
  EXPECT_DOUBLE_EQ(a.next(1, ra)(0), 0.5 * std::normal_distribution<double>(0.0, 1.0)(rb));
}

TEST(ExplorationNoise, RejectsBadParameters) {
  EXPECT_THROW(ExplorationNoise(0.0, 0.9, 0.0), InvalidInput);
  EXPECT_THROW(ExplorationNoise(0.5, 1.5, 0.0), InvalidInput);
  EXPECT_THROW(ExplorationNoise(0.5, 0.9, 0.6), InvalidInput);
  EXPECT_THROW(ExplorationNoise(0.5, 0.9, 0.1, NoiseKind::OrnsteinUhlenbeck, 0.0), InvalidInput);
}

}  // namespace
}  // namespace llql
