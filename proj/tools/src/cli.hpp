#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kansid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to
/// `err`; only --help text goes to `out`; results go to files.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kansid::cli
