#pragma once

#include <iostream>

namespace wino {

/// Entry point behind the `wino` binary, callable in-process for tests.
/// Returns the process exit status: 0 on success, 2 on configuration errors,
/// 1 on runtime errors. Every failure prints a single `error: ...` line to
/// the diagnostic stream.
int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
             std::ostream& err = std::cerr);

} // namespace wino
