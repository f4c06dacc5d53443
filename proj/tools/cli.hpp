#pragma once

#include <ostream>

namespace cpl::cli {

/// Entry point of the `cplmon` tool. Exit codes: 0 success, 1 differential
/// mismatch found by `fuzz`, 2 invalid input or usage.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cpl::cli
