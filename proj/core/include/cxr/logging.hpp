#pragma once

#include <string_view>

namespace cxr {

/// "trace", "debug", "info", "warn", "error" or "off". Returns false and
/// leaves the level unchanged for anything else.
bool set_log_level(std::string_view level);

}  // namespace cxr
