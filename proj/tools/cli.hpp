#pragma once

namespace rvae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitVersion = 3;

/// Entry point of the `rvae` tool; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace rvae::cli
