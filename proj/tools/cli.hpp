#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace madi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSingularModel = 3;
inline constexpr int kExitInsufficientSample = 4;

inline constexpr const char* kVersion = "1.0.0";

/// Runs the `madi` command line with `args` excluding the program name.
/// Never throws; failures are reported on `err` and in the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

}  // namespace madi::cli
