#pragma once

#include <string_view>

namespace gridcast::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

/// Messages below this level are discarded. Default: warn.
void set_level(Level level) noexcept;
[[nodiscard]] Level level() noexcept;

void write(Level level, std::string_view module, std::string_view message);

inline void debug(std::string_view module, std::string_view message) { write(Level::debug, module, message); }
inline void info(std::string_view module, std::string_view message) { write(Level::info, module, message); }
inline void warn(std::string_view module, std::string_view message) { write(Level::warn, module, message); }

} // namespace gridcast::log
