#include "llql/policy.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "llql/controller.hpp"
#include "llql/errors.hpp"

namespace llql {

LlqlPolicy::LlqlPolicy(LlqlModel model, ActionBounds bounds, std::uint64_t seed)
    : model_(std::move(model)), bounds_(std::move(bounds)), rng_(seed) {}

Action LlqlPolicy::act(const State& x) { return long_term_action(model_.q, x, bounds_, rng_).clipped; }

ExternalProcessPolicy::ExternalProcessPolicy(std::vector<std::string> argv, ActionBounds bounds,
                                             std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), bounds_(std::move(bounds)), timeout_(timeout) {
  if (argv_.empty() || argv_.front().empty()) throw ConfigError("external policy command is empty");
  int in[2];
  int out[2];
  if (pipe(in) != 0 || pipe(out) != 0) throw Error(std::string("pipe failed: ") + std::strerror(errno));
  pid_ = fork();
  if (pid_ < 0) throw Error(std::string("fork failed: ") + std::strerror(errno));
  if (pid_ == 0) {
    dup2(in[0], STDIN_FILENO);
    dup2(out[1], STDOUT_FILENO);
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  to_child_ = in[1];
  from_child_ = out[0];
  signal(SIGPIPE, SIG_IGN);
}

ExternalProcessPolicy::~ExternalProcessPolicy() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
  }
}

std::string ExternalProcessPolicy::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (const auto nl = pending_.find('\n'); nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      return line;
    }
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Error("external policy '" + argv_.front() + "' timed out");
    pollfd p{from_child_, POLLIN, 0};
    const int r = poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) throw Error(std::string("poll failed: ") + std::strerror(errno));
    if (r == 0) continue;
    char buf[4096];
    const ssize_t n = read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error("external policy '" + argv_.front() + "' closed its output");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

Action ExternalProcessPolicy::act(const State& x) {
  const std::string request =
      nlohmann::json{{"state", std::vector<double>(x.data(), x.data() + x.size())}}.dump() + "\n";
  std::size_t sent = 0;
  while (sent < request.size()) {
    const ssize_t n = write(to_child_, request.data() + sent, request.size() - sent);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error("external policy '" + argv_.front() + "' is not accepting input");
    sent += static_cast<std::size_t>(n);
  }
  const std::string line = read_line();
  std::vector<double> a;
  try {
    a = nlohmann::json::parse(line).at("action").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed reply from external policy: " + std::string(e.what()));
  }
  if (static_cast<int>(a.size()) != bounds_.dim()) {
    throw DimensionMismatch("external policy returned " + std::to_string(a.size()) + " action components, expected " +
                            std::to_string(bounds_.dim()));
  }
  const Action u = Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
  if (!u.allFinite()) throw NonFiniteValue("external policy returned a non-finite action");
  return bounds_.clip(u);
}

std::unique_ptr<Policy> load_policy(const std::string& spec, const ActionBounds& bounds, std::uint64_t seed) {
  constexpr std::string_view kExec = "exec:";
  if (spec.starts_with(kExec)) {
    std::istringstream in(spec.substr(kExec.size()));
    std::vector<std::string> argv;
    for (std::string tok; in >> tok;) argv.push_back(tok);
    return std::make_unique<ExternalProcessPolicy>(std::move(argv), bounds);
  }
  const ModelBundle bundle = load_bundle(spec);
  const std::string role = bundle.metadata.value("role", "");
  if (role == "llql") return std::make_unique<LlqlPolicy>(llql_from_bundle(bundle), bounds, seed);
  if (role == "ddpg") return std::make_unique<DdpgPolicy>(ddpg_from_bundle(bundle));
  throw ConfigError("model '" + spec + "' has role '" + role + "', which is not a policy");
}

}  // namespace llql
