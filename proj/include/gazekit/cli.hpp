#pragma once

#include <string>
#include <vector>

namespace gazekit {

// Exit codes: 0 success, 1 domain error, 2 usage error.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace gazekit
