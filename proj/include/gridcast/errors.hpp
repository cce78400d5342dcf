#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridcast {

/// Base for every error raised by the library. The message is prefixed
/// with the module that raised it, e.g. "linreg: rank deficient ...".
class Error : public std::runtime_error {
public:
	Error(std::string_view module, const std::string &message)
	    : std::runtime_error(std::string(module) + ": " + message), module_(module) {}

	[[nodiscard]] const std::string &module() const noexcept { return module_; }

private:
	std::string module_;
};

/// Bad configuration, bad arguments or violated preconditions (CLI exit 2).
class ConfigError : public Error {
public:
	using Error::Error;
};

/// Unusable input data: malformed files, missing columns, gaps (CLI exit 3).
class DataError : public Error {
public:
	using Error::Error;
};

/// Numerical failure: rank deficiency, non-stationary optimum (CLI exit 4).
class NumericalError : public Error {
public:
	using Error::Error;
};

} // namespace gridcast
