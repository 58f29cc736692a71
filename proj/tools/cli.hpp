#pragma once

#include <string>
#include <vector>

namespace pism::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

// Parses argv-style arguments (args[0] is the program name) and runs the
// selected subcommand. Returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace pism::cli
