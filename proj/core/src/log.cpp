#include "log.hpp"

#include "cxr/logging.hpp"

#include <spdlog/spdlog.h>

namespace cxr::detail {

void log_debug(const std::string& message) { spdlog::debug(message); }
void log_info(const std::string& message) { spdlog::info(message); }
void log_warn(const std::string& message) { spdlog::warn(message); }
void log_error(const std::string& message) { spdlog::error(message); }

}  // namespace cxr::detail

namespace cxr {

bool set_log_level(std::string_view level) {
  const auto parsed = spdlog::level::from_str(std::string(level));
  if (parsed == spdlog::level::off && level != "off") return false;
  spdlog::set_level(parsed);
  return true;
}

}  // namespace cxr
