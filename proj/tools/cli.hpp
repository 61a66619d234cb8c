#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace reasonedit::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 1,
    kProviderUnreachable = 2,
    kInfeasible = 3,
    kIncompatible = 4,
};

// Exit code for an exception thrown by the engine.
int exit_code_for(const std::exception_ptr& error);

// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reasonedit::cli
