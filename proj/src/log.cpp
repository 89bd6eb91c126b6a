#include "emgstream/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace emgstream {

LogLevel log_threshold() {
  static LogLevel cached = [] {
    const char* env = std::getenv("EMGSTREAM_LOG");
    if (!env) return LogLevel::Warn;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "off") == 0) return LogLevel::Off;
    return LogLevel::Warn;
  }();
  return cached;
}

void log_message(LogLevel level, const std::string& msg) {
  if (level < log_threshold()) return;
  const char* tag = "";
  switch (level) {
    case LogLevel::Debug: tag = "debug"; break;
    case LogLevel::Info: tag = "info"; break;
    case LogLevel::Warn: tag = "warn"; break;
    case LogLevel::Error: tag = "error"; break;
    case LogLevel::Off: return;
  }
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

}  // namespace emgstream
