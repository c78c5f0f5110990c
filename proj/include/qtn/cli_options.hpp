#pragma once

#include <ostream>

namespace qtn {

/// Parses the subcommand line, runs it and returns the process exit code.
/// A --config file is read first; flags override its fields.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qtn
