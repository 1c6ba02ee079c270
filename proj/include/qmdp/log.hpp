#pragma once

#include <string_view>

namespace qmdp {

// 0 = warnings only, 1 = progress, 2 = solver iterations.
void set_verbosity(int level);
int verbosity();
void log_message(int level, std::string_view msg);
inline void warn(std::string_view msg) { log_message(0, msg); }

}  // namespace qmdp
