#pragma once

#include <string>
#include <vector>

namespace pvcm::cli {

/// Exit codes returned by run().
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kIo = 2;
inline constexpr int kNotConverged = 3;

/// Runs one subcommand. args excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace pvcm::cli
