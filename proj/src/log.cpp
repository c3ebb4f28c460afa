#include "meguide/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace meguide {
namespace {
std::atomic<LogLevel> g_level{LogLevel::warn};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level.store(level); }
LogLevel log_level() { return g_level.load(); }

void log_info(const std::string& msg) {
  if (g_level.load() < LogLevel::info) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[meguide] " << msg << '\n';
}

void log_warn(const std::string& msg) {
  if (g_level.load() < LogLevel::warn) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[meguide] warning: " << msg << '\n';
}

}  // namespace meguide
