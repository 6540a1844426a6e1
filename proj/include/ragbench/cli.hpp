#pragma once

#include <iostream>

namespace ragbench::cli {

/// Exit codes returned by `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;  // ingestion or pipeline failure
inline constexpr int kExitConfig = 2;   // bad flags, bad config, missing artifact

/// Entry point of the `ragbench` command. Output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace ragbench::cli
