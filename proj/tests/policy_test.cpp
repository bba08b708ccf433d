#include <chrono>
#include <filesystem>

#include <gtest/gtest.h>

#include "llql/ddpg.hpp"
#include "llql/errors.hpp"
#include "llql/policy.hpp"
#include "test_util.hpp"

namespace llql {
namespace {

using testing::vec;

const ActionBounds kUnit{vec({-1.0}), vec({1.0})};

std::string server(const std::string& mode) { return std::string("exec:") + FAKE_POLICY_SERVER + " " + mode; }

TEST(ExternalPolicy, RoundTripsAndClips) {
  auto p = load_policy(server("sum"), kUnit);
  EXPECT_DOUBLE_EQ(p->act(vec({0.25, 0.5}))(0), 0.75);
  EXPECT_EQ(p->act(vec({0.9, 0.5}))(0), 1.0);
  EXPECT_EQ(p->act(vec({-3.0, 0.0}))(0), -1.0);
  EXPECT_EQ(p->name().rfind("external:", 0), 0u);
}

TEST(ExternalPolicy, TimesOut) {
  ExternalProcessPolicy p({FAKE_POLICY_SERVER, "slow"}, kUnit, std::chrono::milliseconds(200));
  const auto start = std::chrono::steady_clock::now();
  try {
    (void)p.act(vec({0.0, 0.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("timed out"), std::string::npos);
  }
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(ExternalPolicy, MalformedReply) {
  auto p = load_policy(server("garbage"), kUnit);
  EXPECT_THROW((void)p->act(vec({0.0, 0.0})), Error);
}

TEST(ExternalPolicy, WrongActionSize) {
  auto p = load_policy(server("wide"), kUnit);
  EXPECT_THROW((void)p->act(vec({0.0, 0.0})), DimensionMismatch);
}

TEST(ExternalPolicy, NonFiniteAction) {
  auto p = load_policy(server("inf"), kUnit);
  EXPECT_THROW((void)p->act(vec({0.0, 0.0})), Error);
}

TEST(ExternalPolicy, ChildExits) {
  auto p = load_policy(server("quit"), kUnit);
  EXPECT_THROW((void)p->act(vec({0.0, 0.0})), Error);
}

TEST(ExternalPolicy, MissingExecutable) {
  auto p = load_policy("exec:/definitely/not/a/program", kUnit);
  EXPECT_THROW((void)p->act(vec({0.0, 0.0})), Error);
}

TEST(LoadPolicy, MissingModelFileNamesPath) {
  try {
    (void)load_policy("/no/such/model.llql", kUnit);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/no/such/model.llql"), std::string::npos);
  }
}

TEST(LoadPolicy, ModelFilesByRole) {
  const auto dir = std::filesystem::temp_directory_path() / "llql_policy_test";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(1);
  const DdpgModel ddpg(2, kUnit, {8}, rng);
  save_bundle(to_bundle(ddpg, {}), dir / "d.llql");
  auto dp = load_policy((dir / "d.llql").string(), kUnit);
  EXPECT_EQ(dp->name(), "ddpg");
  EXPECT_EQ(dp->act(vec({0.1, 0.2})), ddpg.act(vec({0.1, 0.2})));

  LlqlModel llql{testing::constant_dynamics(vec({0.0, 0.0}), Mat::Ones(2, 1), 0.001),
                 testing::constant_q(2, 0.0, vec({-0.5}), Mat::Constant(1, 1, 1.0))};
  save_bundle(to_bundle(llql, {}), dir / "l.llql");
  auto lp = load_policy((dir / "l.llql").string(), kUnit);
  EXPECT_NEAR(lp->act(vec({0.1, 0.2}))(0), 0.5, 1e-8);

  ModelBundle other;
  other.normalizer = Normalizer::identity(2);
  other.metadata = {{"role", "dynamics"}};
  save_bundle(other, dir / "o.llql");
  EXPECT_THROW((void)load_policy((dir / "o.llql").string(), kUnit), ConfigError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace llql
