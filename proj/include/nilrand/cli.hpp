#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nilrand::cli {

// Exit statuses of run().
inline constexpr int kOk = 0;
inline constexpr int kDomainError = 1;  // JSON error object on stdout
inline constexpr int kUsageError = 2;

// Parses args (args[0] is the program name) and dispatches one subcommand.
// Machine-readable output goes to `out`, human-readable summaries to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace nilrand::cli
