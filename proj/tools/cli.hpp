#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dtscr::cli {

/// Runs one `dtscr` invocation. Exit codes: 0 success, 1 estimation failure,
/// 2 invalid input. Errors are reported on `err` as a JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dtscr::cli
