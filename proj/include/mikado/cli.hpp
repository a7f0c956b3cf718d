#pragma once

#include <ostream>

namespace mikado {

/// Entry point of the `mikado` tool: simulate, detect, bench-der,
/// bench-runtime, bench-tuning and use-case. Returns the process exit code;
/// errors are reported on `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mikado
