#pragma once

namespace llql {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the `llql` tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace llql
