#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mwdwd::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kInput = 3, kNumerical = 4 };

/// Runs the command line `args` (without the program name). Normal output
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mwdwd::cli
