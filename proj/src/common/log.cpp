#include "mitoforge/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace mitoforge::log {

namespace {
std::atomic<Level> g_min_level{Level::Info};
std::mutex g_mutex;

const char* level_name(Level l) {
    switch (l) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        case Level::Error: return "error";
    }
    return "info";
}
}  // namespace

void set_min_level(Level level) noexcept { g_min_level = level; }

void event(Level level, std::string_view msg, const nlohmann::json& fields) {
    if (level < g_min_level.load()) return;
    nlohmann::json rec = fields.is_object() ? fields : nlohmann::json{{"data", fields}};
    rec["level"] = level_name(level);
    rec["msg"] = std::string(msg);
    const auto line = rec.dump() + "\n";
    std::lock_guard lock(g_mutex);
    std::fputs(line.c_str(), stderr);
}

}  // namespace mitoforge::log
