#pragma once

#include <ostream>

namespace gpcca::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kNumericalError = 2,
  kNotConverged = 3,
};

/// Runs the gpcca command line. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gpcca::cli
