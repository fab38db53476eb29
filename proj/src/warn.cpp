#include "catapult/warn.hpp"

#include <iostream>
#include <mutex>

namespace catapult {

namespace {
std::mutex g_mutex;
WarningHandler& handler() {
  static WarningHandler h = [](const std::string& m) { std::clog << "warning: " << m << '\n'; };
  return h;
}
}  // namespace

void set_warning_handler(WarningHandler h) {
  std::lock_guard lock(g_mutex);
  handler() = h ? std::move(h) : [](const std::string&) {};
}

void warn(const std::string& message) {
  std::lock_guard lock(g_mutex);
  handler()(message);
}

}  // namespace catapult
