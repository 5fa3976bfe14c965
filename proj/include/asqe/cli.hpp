#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace asqe {

/// Exit codes of run_command.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitNumerical = 2,
  kExitCheckFailed = 3,
};

/// Runs one subcommand (spectrum, green, sample-gff, sample-gibbs, simulate,
/// invariance, check). args excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, const char* const* argv);

}  // namespace asqe
