#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lesionbench::cli {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on validation or usage errors, 2 on internal errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

std::string version();

}  // namespace lesionbench::cli
