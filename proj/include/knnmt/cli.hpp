#pragma once

#include <iosfwd>

namespace knnmt {

// Entry point behind the knnmt binary; exposed so tests can drive the exact
// command code paths. Returns the process exit code:
//   0 success, 1 usage error, 2 data/format error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace knnmt
