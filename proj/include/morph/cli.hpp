#pragma once

#include <ostream>

namespace morph {

/// Exit codes: 0 success (converged), 2 finished without converging, 1 error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

/// Subcommands: optimize, simulate, gradcheck, tessellate, examples.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace morph
