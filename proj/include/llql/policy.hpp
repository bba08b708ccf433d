#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "llql/ddpg.hpp"
#include "llql/trainer.hpp"

namespace llql {

/// A pre-trained policy x -> u^N. Implementations return finite actions
/// within the bounds they report.
class Policy {
 public:
  virtual ~Policy() = default;
  [[nodiscard]] virtual Action act(const State& x) = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// The long-term pseudo-inverse action of a trained LLQL model, clipped.
class LlqlPolicy final : public Policy {
 public:
  LlqlPolicy(LlqlModel model, ActionBounds bounds, std::uint64_t seed);
  Action act(const State& x) override;
  std::string name() const override { return "llql"; }
  [[nodiscard]] const LlqlModel& model() const { return model_; }

 private:
  LlqlModel model_;
  ActionBounds bounds_;
  std::mt19937_64 rng_;
};

class DdpgPolicy final : public Policy {
 public:
  explicit DdpgPolicy(DdpgModel model) : model_(std::move(model)) {}
  Action act(const State& x) override { return model_.act(x); }
  std::string name() const override { return "ddpg"; }

 private:
  DdpgModel model_;
};

/// Talks to a child process over its standard streams, one JSON document
/// per line: request {"state": [...]}, response {"action": [...]}.
class ExternalProcessPolicy final : public Policy {
 public:
  /// argv[0] is resolved through PATH. The reply deadline applies per query.
  ExternalProcessPolicy(std::vector<std::string> argv, ActionBounds bounds,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds(1000));
  ~ExternalProcessPolicy() override;
  ExternalProcessPolicy(const ExternalProcessPolicy&) = delete;
  ExternalProcessPolicy& operator=(const ExternalProcessPolicy&) = delete;

  /// Throws Error on timeout, malformed replies, wrong action size or a
  /// non-finite action. Replies are clipped to the bounds.
  Action act(const State& x) override;
  std::string name() const override { return "external:" + argv_.front(); }

 private:
  std::string read_line();

  std::vector<std::string> argv_;
  ActionBounds bounds_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
};

/// Opens a policy handle. `spec` is either a model file written by this
/// project (role "llql" or "ddpg") or "exec:<command> [args...]" for an
/// external process. Missing files raise IoError naming the path.
[[nodiscard]] std::unique_ptr<Policy> load_policy(const std::string& spec, const ActionBounds& bounds,
                                                  std::uint64_t seed = 0);

}  // namespace llql
