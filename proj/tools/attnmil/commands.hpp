#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace attnmil::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by main() and the tests. `args` excludes the program
/// name. Errors are reported on `err` as one line starting with
/// "error[usage]:" (exit 2) or "error[internal]:" (exit 1).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace attnmil::cli
