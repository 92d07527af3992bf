#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace steer::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
    ok = 0,
    error = 1,
    degraded = 2,
};

/// Runs the command line `args` (args[0] is the program name). Human-readable
/// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace steer::cli
