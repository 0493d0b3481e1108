#pragma once

// Command-line front end. Exit codes: 0 ok, 1 parse error, 2 validation
// error, 3 synthesis failure, 4 verification failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace piq {

enum ExitCode { kExitOk = 0, kExitParse = 1, kExitValidation = 2, kExitSynthesis = 3, kExitVerification = 4 };

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace piq
