#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdfdiff {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitNumeric = 2,
  kExitIo = 3,
};

/// Runs the command line tool. `args` excludes the program name. Results go to
/// `out`, log lines and error messages to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdfdiff
