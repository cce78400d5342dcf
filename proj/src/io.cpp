#include "gridcast/io.hpp"

#include "gridcast/errors.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace gridcast::io {

std::string read_file(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw DataError("io", "cannot open " + path.string());
	}
	std::ostringstream buffer;
	buffer << in.rdbuf();
	return buffer.str();
}

void write_file_atomic(const std::filesystem::path &path, std::string_view content) {
	auto tmp = path;
	tmp += ".tmp";
	{
		std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
		if (!out) {
			throw DataError("io", "cannot write " + path.string());
		}
		out.write(content.data(), static_cast<std::streamsize>(content.size()));
		if (!out) {
			throw DataError("io", "write failed for " + path.string());
		}
	}
	std::error_code ec;
	std::filesystem::rename(tmp, path, ec);
	if (ec) {
		std::filesystem::remove(tmp, ec);
		throw DataError("io", "cannot rename into " + path.string());
	}
}

std::string format_double(double value) {
	std::array<char, 64> buf{};
	auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
	if (ec != std::errc{}) {
		throw std::logic_error("to_chars failed");
	}
	return {buf.data(), end};
}

std::string format_significant(double value, int digits) {
	std::array<char, 64> buf{};
	std::snprintf(buf.data(), buf.size(), "%.*g", digits, value);
	return buf.data();
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
	std::uint64_t h = 1469598103934665603ULL;
	for (unsigned char c : bytes) {
		h ^= c;
		h *= 1099511628211ULL;
	}
	return h;
}

} // namespace gridcast::io
