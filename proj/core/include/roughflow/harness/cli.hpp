#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace roughflow::harness {

/// Runs one CLI invocation; args[0] is the program name. Exit code 0 on
/// success, 1 on validation/usage errors, 2 on numerical failure.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, char** argv);

/// Output directory: --out, else $ROUGHFLOW_OUT, else the config's out_dir.
std::string resolve_out_dir(const std::string& cli_out, const std::string& config_out);

}  // namespace roughflow::harness
