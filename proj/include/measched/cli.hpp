#pragma once

#include <iosfwd>

namespace measched {

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "MEASCHED_CONFIG";

/// Entry point for `measched simulate|train|evaluate|trace`. Returns the
/// process exit code: 0 when the requested artifact was fully written,
/// 2 for usage or configuration errors, 1 for runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace measched
