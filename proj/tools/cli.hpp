#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qtrap::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 1;
inline constexpr int kAnalysis = 2;
inline constexpr int kIo = 3;
inline constexpr int kUsage = 64;

/// Environment variable naming a JSON weights file used when --weights is
/// not given: {"trust": .., "econ": .., "energy": .., "policy": ".."}.
inline constexpr const char* kWeightsEnv = "QTRAP_WEIGHTS_FILE";

/// Runs one invocation. args excludes the program name. An input path of
/// "-" reads JSONL from `in`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace qtrap::cli
