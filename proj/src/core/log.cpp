#include "flarecast/log.hpp"

#include <spdlog/spdlog.h>

namespace flarecast::log {

void info(std::string_view message) { spdlog::info("{}", message); }
void warn(std::string_view message) { spdlog::warn("{}", message); }

}  // namespace flarecast::log
