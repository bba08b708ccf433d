#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(LLQL_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  Outcome o;
  if (!pipe) return o;
  std::array<char, 4096> buf{};
  for (std::size_t n; (n = fread(buf.data(), 1, buf.size(), pipe)) > 0;) o.output.append(buf.data(), n);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("llql_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(Cli, HelpExitsZero) {
  for (const char* args : {"--help", "train --help", "eval --help", "compare --help"}) {
    const Outcome o = run(args);
    EXPECT_EQ(o.code, 0) << args;
    EXPECT_NE(o.output.find("Usage"), std::string::npos) << args;
  }
}

TEST_F(Cli, UnknownFlagExitsTwo) {
  EXPECT_EQ(run("--bogus").code, 2);
  EXPECT_EQ(run("train --no-such-flag").code, 2);
}

TEST_F(Cli, MissingModelPathIsNamed) {
  const Outcome o = run("eval " + (dir_ / "missing.llql").string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find((dir_ / "missing.llql").string()), std::string::npos);
}

TEST_F(Cli, UnknownSettingExitsTwo) {
  const Outcome o = run("train --set llql.bogus=1 -o " + dir_.string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find("llql.bogus"), std::string::npos);
}

TEST_F(Cli, MissingConfigFileExitsTwo) {
  const Outcome o = run("train -c " + (dir_ / "nope.conf").string() + " -o " + dir_.string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find("nope.conf"), std::string::npos);
}

TEST_F(Cli, TrainThenEvaluateTinyModel) {
  const std::string common = " -o " + dir_.string() +
                             " --set llql.episodes=2 --set llql.horizon=40 --set llql.hidden=8"
                             " --set llql.normalizer_samples=20 --set eval.runs=2";
  const Outcome t = run("train -s 3" + common);
  ASSERT_EQ(t.code, 0) << t.output;
  const fs::path model = dir_ / "llql-mountain_car-seed3.llql";
  ASSERT_TRUE(fs::exists(model)) << t.output;
  EXPECT_TRUE(fs::exists(dir_ / "llql-mountain_car-seed3.csv"));

  const Outcome e = run("eval " + model.string() + " -g mc-constraint -n 2" + common);
  ASSERT_EQ(e.code, 0) << e.output;
  std::ifstream is(dir_ / "report.csv");
  ASSERT_TRUE(is) << e.output;
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "method,seed,run,steps,success,e_v,s_out,reward");
  EXPECT_FALSE(row.empty());
}

TEST_F(Cli, AdjustExternalPolicy) {
  const std::string common = " -o " + dir_.string() +
                             " --set llql.episodes=1 --set llql.horizon=30 --set llql.hidden=8"
                             " --set llql.normalizer_samples=20";
  ASSERT_EQ(run("train -s 1" + common).code, 0);
  const fs::path model = dir_ / "llql-mountain_car-seed1.llql";
  const Outcome a = run("adjust -p 'exec:" + std::string(FAKE_POLICY_SERVER) + " sum' -d " + model.string() +
                        " -g mc-constraint -n 1 --set eval.runs=1" + common);
  ASSERT_EQ(a.code, 0) << a.output;
  std::ifstream is(dir_ / "report.csv");
  ASSERT_TRUE(is);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("+adjustment"), std::string::npos) << text;
}

}  // namespace
