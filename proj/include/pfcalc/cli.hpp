#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pfcalc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitVerificationFailed = 2;

/// Runs one command line (without the program name). Reports go to `out`
/// unless --out is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pfcalc
