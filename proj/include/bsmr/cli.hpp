#pragma once

namespace bsmr::cli {

// Full command dispatcher: parses argv, runs the verb, maps exceptions to
// exit codes (0 ok, 1 numerical failure, 2 I/O or config error) and prints
// a one-line JSON error envelope to stderr on failure.
int run(int argc, const char* const* argv);

}  // namespace bsmr::cli
