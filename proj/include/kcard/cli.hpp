#pragma once

#include <iosfwd>

namespace kcard {

/// Entry point of the `kcard` tool. Returns 0 on success, 1 on validation
/// failure, 2 on I/O failure; diagnostics go to `err` as a single line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace kcard
