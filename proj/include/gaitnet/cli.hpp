#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gaitnet {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;    // usage, bad files, bad configs
inline constexpr int kExitRuntime = 3;  // numeric failures, failed checks

// Environment variable naming the default output root.
inline constexpr const char* kOutEnv = "GAITNET_OUT";

// Runs one invocation; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gaitnet
