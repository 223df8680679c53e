#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace trapforge::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, silent = 4 };

// Verbosity comes from TRAPFORGE_LOG (debug|info|warn|error|silent), default warn.
inline Level threshold() {
  static Level cached = [] {
    const char* env = std::getenv("TRAPFORGE_LOG");
    if (!env) return Level::warn;
    if (std::strcmp(env, "debug") == 0) return Level::debug;
    if (std::strcmp(env, "info") == 0) return Level::info;
    if (std::strcmp(env, "warn") == 0) return Level::warn;
    if (std::strcmp(env, "error") == 0) return Level::error;
    if (std::strcmp(env, "silent") == 0) return Level::silent;
    return Level::warn;
  }();
  return cached;
}

inline void emit(Level level, const char* tag, const std::string& message) {
  if (level < threshold()) return;
  std::fprintf(stderr, "trapforge [%s] %s\n", tag, message.c_str());
}

inline void debug(const std::string& m) { emit(Level::debug, "debug", m); }
inline void info(const std::string& m) { emit(Level::info, "info", m); }
inline void warn(const std::string& m) { emit(Level::warn, "warn", m); }
inline void error(const std::string& m) { emit(Level::error, "error", m); }

}  // namespace trapforge::log
