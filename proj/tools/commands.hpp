#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace covnmt::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2, kNumericError = 3 };

// Runs one command line (program name excluded). Errors are reported on err
// and mapped to an exit code instead of escaping.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace covnmt::cli
