#pragma once

#include <iosfwd>

namespace ham::cli {

/// Exit codes of the command-line tool.
enum Exit : int { kOk = 0, kDomainError = 1, kConfigError = 2 };

/// Runs the `ham` command line. Relative output paths are placed under
/// $HAM_OUTPUT_DIR when it is set; input paths are never redirected.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ham::cli
