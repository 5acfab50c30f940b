#pragma once

#include <ostream>

namespace drpg::cli {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitValidation = 2,
    kExitNumerical = 3,
};

/// Entry point of the drpg tool; out and err stand in for stdout and stderr.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace drpg::cli
