#pragma once

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <memory>
#include <string>

namespace skelfuse {

/// Library logger, writing to stderr. The level comes from SKELFUSE_LOG
/// (trace, debug, info, warn, error, critical, off); default warn.
inline std::shared_ptr<spdlog::logger> logger() {
    static const std::shared_ptr<spdlog::logger> instance = [] {
        auto existing = spdlog::get("skelfuse");
        auto log = existing ? existing : spdlog::stderr_color_mt("skelfuse");
        spdlog::level::level_enum level = spdlog::level::warn;
        if (const char* env = std::getenv("SKELFUSE_LOG"); env != nullptr && *env != '\0') {
            level = spdlog::level::from_str(env);
        }
        log->set_level(level);
        log->set_pattern("[%H:%M:%S.%e] [%n] [%l] %v");
        return log;
    }();
    return instance;
}

}  // namespace skelfuse
