#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hemlr::cli {

    enum ExitCode : int {
        kOk = 0,
        kDataError = 1,
        kConfigError = 2,
        kBudgetExhausted = 3,
    };

    // Runs one command line (args excludes the program name) and returns the process exit code.
    int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace hemlr::cli
