#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spikematch::cli {

/// Parses and runs one subcommand. Returns the process exit code:
/// 0 success, 1 runtime failure, 2 invalid configuration or usage.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace spikematch::cli
