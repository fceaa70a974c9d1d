#include "vqforge/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace vqforge {

static LogLevel parse_level(const char* s) {
  if (!s) return LogLevel::info;
  if (std::strcmp(s, "debug") == 0) return LogLevel::debug;
  if (std::strcmp(s, "info") == 0) return LogLevel::info;
  if (std::strcmp(s, "warn") == 0) return LogLevel::warn;
  if (std::strcmp(s, "error") == 0) return LogLevel::error;
  return LogLevel::info;
}

LogLevel log_threshold() {
  static LogLevel level = parse_level(std::getenv("VQFORGE_LOG"));
  return level;
}

void log_write(LogLevel level, const std::string& msg) {
  if (level < log_threshold()) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

}  // namespace vqforge
