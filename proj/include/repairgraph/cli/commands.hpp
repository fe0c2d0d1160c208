#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace repairgraph::cli {

// Total exit-code mapping shared by every subcommand.
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitFailure = 1;  // config-check findings, internal faults
inline constexpr int kExitRepairsExhausted = 2;
inline constexpr int kExitBackendError = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitNotFound = 65;

// Parses argv (program name removed) and runs one subcommand. All human
// output goes to the provided streams so callers can capture it.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace repairgraph::cli
