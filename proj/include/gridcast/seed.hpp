#pragma once

#include <cstdint>
#include <string_view>

namespace gridcast {

/// splitmix64 finaliser.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

/// Independent stream seed for a named consumer of the root seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t root, std::string_view label) noexcept;

} // namespace gridcast
