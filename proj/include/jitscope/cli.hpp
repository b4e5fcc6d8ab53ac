#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace jitscope::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kUsage = 2, kIo = 3 };

// Runs one jitscope invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jitscope::cli
