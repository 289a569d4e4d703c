#pragma once

#include <iostream>
#include <mutex>
#include <sstream>

namespace rlmpc {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

inline LogLevel& log_level() {
  static LogLevel level = LogLevel::Info;
  return level;
}

template <typename... Args>
void log_at(LogLevel level, const Args&... args) {
  if (static_cast<int>(log_level()) < static_cast<int>(level)) return;
  std::ostringstream os;
  (os << ... << args);
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << os.str() << '\n';
}

template <typename... Args>
void log_info(const Args&... args) {
  log_at(LogLevel::Info, args...);
}

template <typename... Args>
void log_debug(const Args&... args) {
  log_at(LogLevel::Debug, args...);
}

}  // namespace rlmpc
