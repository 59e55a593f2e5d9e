#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace progsearch::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kIo = 3,
  kEmptyInput = 4,
};

/// Runs one command line (args[0] is the program name). Search results and
/// reports go to `out` unless redirected to files; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Distance as printed by `search`: shortest round-trip decimal, always with a
/// fractional part or exponent (e.g. "0.0", "1.5", "2e-07").
std::string format_distance(double d);

}  // namespace progsearch::cli
