#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mxrot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (args excludes the program name). Reports go to
/// the paths given by flags, or as JSON to `out` when no path is given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace mxrot::cli
