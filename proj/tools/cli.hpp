#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wdje::cli {

/// Exit codes: 0 success, 1 usage or validation error, 2 numerical or runtime error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wdje::cli
