#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stochproj::cli {

enum ExitCode : int { ok = 0, violation = 1, usage = 2, solver_failure = 3 };

/// Runs one command line. `args` excludes the program name. Results go to
/// `out` (unless --out names a file), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace stochproj::cli
