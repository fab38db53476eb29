#pragma once

#include <functional>
#include <string>

namespace catapult {

/// Non-fatal diagnostics (validity-regime warnings, truncated grids, ...).
/// The default handler prints to std::clog; tests and the CLI may replace it.
using WarningHandler = std::function<void(const std::string&)>;

void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace catapult
