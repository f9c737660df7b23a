#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace outlr::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kSolver = 3, kData = 4 };

// Runs one command line (without the program name). Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace outlr::cli
