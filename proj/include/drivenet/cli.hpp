#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace drivenet {

// Subcommands: synth, train, crossval, predict. `args` excludes the program
// name. Exit codes: 0 success, 1 runtime failure, 2 validation failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drivenet
