#pragma once

#include <string>
#include <vector>

namespace inpc::cli {

enum ExitCode { kOk = 0, kVerifyFailed = 1, kUsage = 2, kIo = 3 };

/// Runs the command-line interface; `args` excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

/// Parses sample counts such as "1048576", "2^20" or "1e6".
unsigned long long parse_count(const std::string& text);

}  // namespace inpc::cli
