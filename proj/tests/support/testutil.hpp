#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace testsupport {

/// Self-deleting scratch directory under the system temp root.
struct TempDir {
    std::filesystem::path path;
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr interleaved
};

/// Path of the CLI binary under test (from the PROMPTSEG_BIN environment
/// variable set by the test harness). Aborts loudly when unset.
std::string cli_binary();

/// Runs the CLI with the given arguments; captures combined output.
RunResult run_cli(const std::vector<std::string>& args);

/// Runs an arbitrary command line (already quoted) and captures output.
RunResult run_command(const std::string& command_line);

std::string shell_quote(const std::string& s);

} // namespace testsupport
