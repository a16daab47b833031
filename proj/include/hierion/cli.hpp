#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace hierion::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

// Runs one command. `args` excludes the program name. `env` replaces the
// process environment when given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>* env = nullptr);

}  // namespace hierion::cli
