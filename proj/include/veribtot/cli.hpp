#pragma once

namespace veribtot {

/// The `veribtot` command line: subcommands run, bench, report, verify.
/// Returns the process exit code.
int cli_main(int argc, const char* const* argv);

}  // namespace veribtot
