#pragma once

#include <string>

namespace vqforge {

// Minimal stderr logger. Level comes from VQFORGE_LOG
// (debug|info|warn|error), default info. Stdout stays reserved for data.
enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

LogLevel log_threshold();
void log_write(LogLevel level, const std::string& msg);

inline void log_debug(const std::string& msg) { log_write(LogLevel::debug, msg); }
inline void log_info(const std::string& msg) { log_write(LogLevel::info, msg); }
inline void log_warn(const std::string& msg) { log_write(LogLevel::warn, msg); }
inline void log_error(const std::string& msg) { log_write(LogLevel::error, msg); }

}  // namespace vqforge
