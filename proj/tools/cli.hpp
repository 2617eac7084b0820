#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace recency::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
    kOk = 0,         ///< success, PASS, converged
    kFail = 1,       ///< domain failure: divergence, violated condition, bound miss
    kUsage = 2,      ///< invalid flags or input files
    kExhausted = 3,  ///< counterexample iteration hit max-iters without a verdict
};

/// Runs the command line `args` (args[0] is the program name). CSV output
/// goes to --out when given, otherwise to `out`; diagnostics go to `err`.
/// Output files are written only after the whole computation succeeded.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace recency::cli
