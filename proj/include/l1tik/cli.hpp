#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace l1tik {

/// Runs the command-line tool. `args` excludes the program name.
/// Returns the process exit status: 0 on success (including unconverged
/// solves), nonzero on usage, config or I/O errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace l1tik
