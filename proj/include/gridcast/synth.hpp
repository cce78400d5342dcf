#pragma once

#include "gridcast/timeseries.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gridcast::synth {

/// Exogenous driver: AR(1) with unit marginal variance scaled by `sd`, or
/// a noisy copy of another driver when `proxy_of` is set.
struct Driver {
	std::string name;
	timeseries::AvailabilityClass tag = timeseries::AvailabilityClass::market_data;
	double coefficient = 0.0; // weight in the response
	double phi = 0.9;
	double mean = 0.0;
	double sd = 1.0;
	std::optional<std::string> proxy_of;
	double proxy_noise = 0.0;
};

struct SyntheticSpec {
	std::size_t n_hours = 2 * 8760; // observed hours
	/// Extra trailing rows where only forecast and market columns are known
	/// (response and real_time drivers missing), as at a forecast origin.
	std::size_t forecast_hours = 24;
	std::string start = "2016-12-19T00:00:00Z";
	std::string response = "co2";
	double intercept = 100.0;
	std::vector<Driver> drivers;
	double daily_amplitude = 10.0;  // sin(2 pi t / 24)
	double weekly_amplitude = 4.0;  // sin(2 pi t / 168)
	double yearly_amplitude = 8.0;  // cos(2 pi t / 8766)
	double residual_phi = 0.8;      // AR(1) residual
	double residual_sd = 3.0;       // innovation sd of the AR residual
	double noise_sd = 1.0;          // iid Gaussian noise
	std::uint64_t seed = 42;

	/// Throws ConfigError on invalid values.
	void validate() const;
};

/// Four drivers covering every availability class.
[[nodiscard]] SyntheticSpec default_spec();

struct Generated {
	timeseries::TimeFrame frame;
	timeseries::Schema schema;
	std::vector<double> residual; // AR component alone, every row
};

[[nodiscard]] Generated generate(const SyntheticSpec &spec);

/// Seasonal component at an absolute hour stamp.
[[nodiscard]] double seasonal(const SyntheticSpec &spec, timeseries::HourStamp stamp);

/// Coefficients, amplitudes and AR parameters for oracle tests.
[[nodiscard]] nlohmann::json ground_truth(const SyntheticSpec &spec);

[[nodiscard]] nlohmann::json to_json(const SyntheticSpec &spec);
[[nodiscard]] SyntheticSpec spec_from_json(const nlohmann::json &j);

/// Writes data.csv, schema.json and truth.json into `dir`.
void write(const SyntheticSpec &spec, const std::filesystem::path &dir);

} // namespace gridcast::synth
