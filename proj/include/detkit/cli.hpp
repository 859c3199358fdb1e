#pragma once

namespace detkit {

/// Command-line entry point. Exit codes: 0 success, 1 validation or data
/// errors (single-line diagnostic on stderr), 2 usage errors.
int run_cli(int argc, char** argv);

}  // namespace detkit
