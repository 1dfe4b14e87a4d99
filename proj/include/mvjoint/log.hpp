#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace mvjoint {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Level comes from MVJOINT_LOG={error,info,debug}, default info.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("MVJOINT_LOG");
        if (env && std::strcmp(env, "debug") == 0) return LogLevel::debug;
        if (env && std::strcmp(env, "error") == 0) return LogLevel::error;
        return LogLevel::info;
    }();
    return level;
}

template <typename... Args>
inline void log_at(LogLevel lvl, const char* tag, const char* fmt, Args... args) {
    if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
    if constexpr (sizeof...(Args) == 0) {
        std::fprintf(stderr, "[%s] %s\n", tag, fmt);
    } else {
        std::fprintf(stderr, "[%s] ", tag);
        std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

template <typename... Args>
inline void log_error(const char* fmt, Args... args) {
    log_at(LogLevel::error, "error", fmt, args...);
}
template <typename... Args>
inline void log_info(const char* fmt, Args... args) {
    log_at(LogLevel::info, "info", fmt, args...);
}
template <typename... Args>
inline void log_debug(const char* fmt, Args... args) {
    log_at(LogLevel::debug, "debug", fmt, args...);
}

}  // namespace mvjoint
