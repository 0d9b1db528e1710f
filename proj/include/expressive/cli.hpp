#pragma once

#include <string>
#include <vector>

namespace expressive::cli {

/// Exit codes: 0 success, 1 runtime error, 2 usage error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace expressive::cli
