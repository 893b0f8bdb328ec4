#pragma once

#include <string>
#include <vector>

#include "emx/errors.hpp"

namespace emx {

/// Exit codes: 0 success, 1 failed verification or other error, 2 configuration
/// or input error, 3 numerical failure, 4 solver non-convergence or bad doping.
int exit_code_for(const Error& e);

int cli_main(int argc, char** argv);
/// args excludes the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace emx
