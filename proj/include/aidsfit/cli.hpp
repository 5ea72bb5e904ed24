#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aidsfit {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,     // bad flags or model specification
    exit_data = 2,      // unreadable or invalid input, output not writable
    exit_numerical = 3  // numerical failure or non-convergence
};

/// Runs one command line (without the program name). Progress and
/// warnings go to `err`, the list of written files to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aidsfit
