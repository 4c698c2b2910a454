#pragma once

#include <iosfwd>

namespace warpforge {

/// Entry point of the `warpforge` tool. Returns 0 on success, 1 on bad input
/// or usage, 2 on numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace warpforge
