#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xlmap::cli {

/// Exit codes: 0 success, 1 validation/format error, 2 internal/numeric error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xlmap::cli
