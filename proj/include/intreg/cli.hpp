#pragma once

#include "intreg/selection.hpp"

#include <string>
#include <vector>

namespace intreg::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { ok = 0, runtime_failure = 1, usage_error = 2 };

/// Bad flags or an invalid run configuration.
class UsageError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "usage_error"; }
};

/// "auto", "auto:N", "auto:N:RATIO", or "l1,l2,...;g1,g2,..." for an explicit grid.
selection::GridSpec parse_grid_spec(const std::string& spec);

/// Runs the tool. Errors are reported as a JSON object on stderr.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace intreg::cli
