#pragma once

#include <iosfwd>

namespace gromovlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 1;
inline constexpr int kExitNonConvergence = 2;
inline constexpr int kExitInternal = 3;

/// Parses argv, runs one subcommand and returns the process exit code.
/// Results go to `out` (or the --out file), diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gromovlab::cli
