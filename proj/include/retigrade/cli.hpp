#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace retigrade {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitConfig = 2 };

int run_cli(int argc, char** argv);
/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace retigrade
