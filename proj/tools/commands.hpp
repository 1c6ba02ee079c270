#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qmdp::cli {

enum Exit : int { ok = 0, invalid = 1, bad_input = 2, not_certified = 3 };

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qmdp::cli
