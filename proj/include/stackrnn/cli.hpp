#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stackrnn::cli {

// Process exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_data = 3;
inline constexpr int exit_numeric = 4;

// Runs one subcommand. `args` excludes the program name. Results that are not
// written to a file go to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stackrnn::cli
