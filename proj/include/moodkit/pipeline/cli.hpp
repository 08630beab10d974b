#pragma once

#include <iosfwd>

namespace moodkit::pipeline {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kFailure = 1, kBadArguments = 2, kIoError = 3, kConfigMismatch = 4 };

/// Entry point of the `moodkit` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace moodkit::pipeline
