#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace memvqa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `memvqa` tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memvqa::cli
