#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace gridcast::io {

[[nodiscard]] std::string read_file(const std::filesystem::path &path);

/// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path &path, std::string_view content);

/// Shortest decimal that round-trips (at most 17 significant digits).
[[nodiscard]] std::string format_double(double value);

/// Fixed number of significant digits, for human-facing tables.
[[nodiscard]] std::string format_significant(double value, int digits);

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a(std::string_view bytes) noexcept;

} // namespace gridcast::io
