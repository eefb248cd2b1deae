#pragma once

#include <iosfwd>

namespace conlab {

/// Entry point of `consensus-lab`. Returns the process exit code; on failure
/// a JSON error object is written to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace conlab
