#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bagflip {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;

/// Runs one subcommand (table, certify, estimate, simulate, eval, kl,
/// oracle-check). `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bagflip
