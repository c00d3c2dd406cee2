#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace resokit::cli {

/// Runs one command line (without the program name). Human-readable or
/// record output goes to `out`, diagnostics to `err`. Returns the process
/// exit status: 0 on success, 1 when `report` finds a failing check, 2 for
/// usage errors and a distinct code per error kind otherwise.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace resokit::cli
