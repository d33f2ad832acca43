#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cogflow/report.hpp"

namespace cogflow {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitCriterionFailure = 1,
  kExitConfigError = 2,
  kExitBackendOrIo = 3,
};

/// Parses `args` (without the program name) and runs the subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

/// Fast self-checks printed by `cogflow validate`.
std::vector<Criterion> builtin_invariants();

}  // namespace cogflow
