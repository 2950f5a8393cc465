#pragma once

#include <string_view>

#include <json.hpp>

namespace mitoforge::log {

enum class Level { Debug, Info, Warn, Error };

void set_min_level(Level level) noexcept;
/// One JSON object per line on standard error.
void event(Level level, std::string_view msg, const nlohmann::json& fields = nlohmann::json::object());

inline void info(std::string_view msg, const nlohmann::json& fields = nlohmann::json::object()) {
    event(Level::Info, msg, fields);
}
inline void warn(std::string_view msg, const nlohmann::json& fields = nlohmann::json::object()) {
    event(Level::Warn, msg, fields);
}

}  // namespace mitoforge::log
