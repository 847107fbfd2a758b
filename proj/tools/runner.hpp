#pragma once

#include <ostream>

#include "run_config.hpp"

namespace grushin::cli {

enum ExitCode : int { exit_ok = 0, exit_io = 1, exit_config = 2, exit_numerical = 3 };

/// Validates every experiment, then runs them in order, writing
/// <out>/NN-<kind>/*.csv, summary.json and <out>/manifest.json.
/// Diagnostics go to `err`; returns the process exit status.
int execute(const RunConfig& rc, std::ostream& err);

} // namespace grushin::cli
