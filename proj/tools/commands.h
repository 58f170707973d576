#pragma once

#include <string>
#include <vector>

namespace shuttlekit::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,
  kExitTimeout = 2,
  kExitInfeasible = 3,
};

/// Parses `args` (without the program name) and runs one subcommand.
/// Never throws; failures map to an exit code with a message on stderr.
int run(const std::vector<std::string>& args);

} // namespace shuttlekit::cli
