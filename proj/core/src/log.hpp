#pragma once

// Logging entry points for sources that cannot include spdlog directly
// (torch ships its own fmt headers, which shadow the ones spdlog expects).

#include <string>

namespace cxr::detail {

void log_debug(const std::string& message);
void log_info(const std::string& message);
void log_warn(const std::string& message);
void log_error(const std::string& message);

}  // namespace cxr::detail
