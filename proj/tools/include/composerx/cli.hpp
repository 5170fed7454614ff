#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace composerx::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitIncomplete = 2;
inline constexpr int kExitAborted = 3;

// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace composerx::cli
