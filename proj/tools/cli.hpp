#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pitchfork::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericError = 3;

/// Runs one command. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pitchfork::cli
