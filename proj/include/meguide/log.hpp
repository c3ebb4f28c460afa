#pragma once

#include <string>

namespace meguide {

enum class LogLevel { quiet = 0, warn = 1, info = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_info(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace meguide
