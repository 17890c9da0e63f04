#pragma once

#include <iosfwd>

namespace tvcycles::cli {

enum ExitCode { kSuccess = 0, kUsageError = 1, kSolverFailure = 2 };

/// Runs the command line `argv` with results on `out` and diagnostics on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace tvcycles::cli
