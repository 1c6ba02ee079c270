#include "qmdp/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace qmdp {

namespace {
std::atomic<int> g_level{0};
std::mutex g_mu;
}  // namespace

void set_verbosity(int level) { g_level = level; }
int verbosity() { return g_level; }

void log_message(int level, std::string_view msg) {
  if (level > g_level) return;
  std::lock_guard<std::mutex> lock(g_mu);
  std::cerr << (level == 0 ? "warning: " : "") << msg << '\n';
}

}  // namespace qmdp
