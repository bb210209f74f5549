#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spamlab::cli {

// Exit codes.
constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

/// Runs one spamlab invocation. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace spamlab::cli
