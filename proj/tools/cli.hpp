#pragma once

#include <iosfwd>

namespace mapselect::cli {

/// Runs the command line tool; returns the process exit code
/// (0 ok, 2 usage/configuration, 3 data/validation/io, 4 numerical).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mapselect::cli
