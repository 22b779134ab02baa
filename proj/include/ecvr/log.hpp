#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace ecvr {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// Verbosity from ECVRLAB_LOG: quiet | info (default) | debug.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("ECVRLAB_LOG");
    if (!env) return LogLevel::Info;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::Quiet;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

template <typename... Args>
void log_info(const char* fmt, Args... args) {
  if (log_level() >= LogLevel::Info) {
    std::fprintf(stderr, fmt, args...);
    std::fputc('\n', stderr);
  }
}

template <typename... Args>
void log_debug(const char* fmt, Args... args) {
  if (log_level() >= LogLevel::Debug) {
    std::fprintf(stderr, fmt, args...);
    std::fputc('\n', stderr);
  }
}

}  // namespace ecvr
