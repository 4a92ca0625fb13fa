#pragma once

#include <iosfwd>

namespace seaforge {

/// Runs one `seaforge` subcommand. Returns 0 on success, 1 on a usage error (help goes to
/// `err`) and 2 on a runtime failure.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace seaforge
