#pragma once

#include <string>
#include <vector>

namespace herdval {

// Entry point shared by the command-line tool and the test suites.
// `args` excludes the program name. Returns a process exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace herdval
