#include "gridcast/seed.hpp"

#include "gridcast/io.hpp"

namespace gridcast {

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) noexcept {
	return splitmix64(root ^ splitmix64(io::fnv1a(label)));
}

} // namespace gridcast
