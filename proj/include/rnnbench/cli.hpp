#pragma once

#include <iosfwd>

namespace rnnbench::cli {

/// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `rnnbench` executable. Output goes to `out`, diagnostics
/// and progress to `err`.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rnnbench::cli
