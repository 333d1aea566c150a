#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace propeval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Entry point shared by the executable and the tests. `args` excludes the
// program name. Subcommands: oracle, evaluate, synth, validate, stats.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace propeval::cli
