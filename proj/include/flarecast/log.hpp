#pragma once

#include <string_view>

// Thin logging entry points for translation units that cannot include
// spdlog directly (libtorch bundles an incompatible fmt).

namespace flarecast::log {

void info(std::string_view message);
void warn(std::string_view message);

}  // namespace flarecast::log
