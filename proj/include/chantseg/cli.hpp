#pragma once

#include <string>
#include <vector>

namespace chantseg::cli {

// Exit codes: 0 success, 1 user error (bad flags, bad input), 2 internal error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace chantseg::cli
