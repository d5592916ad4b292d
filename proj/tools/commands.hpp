#pragma once

#include <iosfwd>

namespace dircn::cli {

// Entry point of the `dircn` tool. Exit codes: 0 success, 1 invalid input
// or configuration, 2 runtime failure (I/O, divergence, failed checks).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dircn::cli
