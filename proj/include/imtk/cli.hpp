// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace imtk::cli {

inline constexpr int kReportVersion = 1;

/// Exit codes.
enum Exit : int { pass = 0, check_failed = 1, usage = 2, model = 3 };

/// Parses argv, runs one subcommand and writes the report to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::vector<std::string> subcommands();

/// Library operation and the subcommand that exercises it.
struct Coverage {
  std::string module;
  std::string operation;
  std::string subcommand;
};

const std::vector<Coverage>& coverage();

}  // namespace imtk::cli
