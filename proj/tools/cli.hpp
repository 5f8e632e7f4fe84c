#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Runs the command line `args` (without the program name). Results go to files named by
/// --out or to `out`; messages go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sparch::cli
