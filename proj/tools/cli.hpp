#ifndef POLYFIT_CLI_HPP
#define POLYFIT_CLI_HPP

namespace polyfit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitUsage = 64;

/// Entry point behind the binary; exposed so tests can drive the real
/// command path in-process.
int run(int argc, const char* const* argv);

}  // namespace polyfit::cli

#endif
