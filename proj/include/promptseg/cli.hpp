#pragma once

namespace promptseg {

/// Full command-line entry point (subcommands: validate, retrieve, predict,
/// sweep). Returns the process exit code:
///   0 success
///   1 validation failure (bad dataset contents, unknown id, k beyond pool)
///   2 usage error (bad flags, unparseable manifest JSON)
///   3 runtime failure (evaluation errors, failed sweep cells)
///   4/5/6/7 remote backend: connect / timeout / protocol / server error
int run_cli(int argc, const char* const* argv);

} // namespace promptseg
