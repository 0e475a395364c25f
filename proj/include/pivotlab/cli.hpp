#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pivotlab::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

// Runs one subcommand. `args` excludes the program name. A JSON summary (or
// a JSON error object) is written to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pivotlab::cli
