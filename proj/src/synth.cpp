#include "gridcast/synth.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"
#include "gridcast/seed.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace gridcast::synth {

namespace {

constexpr const char *kModule = "synth";
constexpr double kYearHours = 8766.0;

using timeseries::AvailabilityClass;

// Stationary AR(1) with unit marginal variance.
std::vector<double> unit_ar1(std::size_t n, double phi, std::mt19937_64 &rng) {
	std::normal_distribution<double> z;
	std::vector<double> out(n);
	const double scale = std::sqrt(1.0 - phi * phi);
	double u = z(rng);
	for (std::size_t t = 0; t < n; ++t) {
		if (t > 0) {
			u = phi * u + scale * z(rng);
		}
		out[t] = u;
	}
	return out;
}

} // namespace

void SyntheticSpec::validate() const {
	if (n_hours < 2) {
		throw ConfigError(kModule, "n_hours must be at least 2");
	}
	if (!(noise_sd >= 0.0) || !(residual_sd >= 0.0)) {
		throw ConfigError(kModule, "noise scales must be non-negative");
	}
	if (!(std::abs(residual_phi) < 1.0)) {
		throw ConfigError(kModule, "residual AR coefficient must satisfy |phi| < 1");
	}
	std::set<std::string, std::less<>> names{response};
	for (const auto &d : drivers) {
		if (d.name.empty() || !names.insert(d.name).second) {
			throw ConfigError(kModule, "driver names must be unique, non-empty and differ from the response");
		}
		if (!(std::abs(d.phi) < 1.0) || !(d.sd >= 0.0) || !(d.proxy_noise >= 0.0)) {
			throw ConfigError(kModule, "driver '" + d.name + "' needs |phi| < 1 and non-negative scales");
		}
	}
	for (const auto &d : drivers) {
		if (d.proxy_of && (*d.proxy_of == d.name || !names.contains(*d.proxy_of) || *d.proxy_of == response)) {
			throw ConfigError(kModule, "driver '" + d.name + "' is a proxy of an unknown driver");
		}
	}
	(void)timeseries::parse_timestamp(start);
}

SyntheticSpec default_spec() {
	SyntheticSpec s;
	s.drivers = {
	    {"load", AvailabilityClass::market_data, 2.0, 0.95, 10.0, 4.0, std::nullopt, 0.0},
	    {"wind", AvailabilityClass::short_term_forecast, -3.0, 0.9, 5.0, 3.0, std::nullopt, 0.0},
	    {"wind_fc", AvailabilityClass::weather_forecast, 0.0, 0.9, 0.0, 1.0, std::string("wind"), 1.0},
	    {"flow", AvailabilityClass::real_time, 1.5, 0.98, 0.0, 2.0, std::nullopt, 0.0},
	};
	return s;
}

double seasonal(const SyntheticSpec &spec, timeseries::HourStamp stamp) {
	const auto t = static_cast<double>(stamp);
	constexpr double two_pi = 2.0 * std::numbers::pi;
	return spec.daily_amplitude * std::sin(two_pi * t / 24.0) + spec.weekly_amplitude * std::sin(two_pi * t / 168.0) +
	       spec.yearly_amplitude * std::cos(two_pi * t / kYearHours);
}

Generated generate(const SyntheticSpec &spec) {
	spec.validate();
	const std::size_t n = spec.n_hours + spec.forecast_hours;
	const timeseries::HourStamp start = timeseries::parse_timestamp(spec.start);

	std::vector<timeseries::Column> columns;
	std::vector<double> y(n, spec.intercept);
	for (const auto &d : spec.drivers) {
		if (d.proxy_of) {
			continue;
		}
		std::mt19937_64 rng(derive_seed(spec.seed, "driver." + d.name));
		auto u = unit_ar1(n, d.phi, rng);
		for (double &v : u) {
			v = d.mean + d.sd * v;
		}
		columns.push_back({d.name, d.tag, std::move(u)});
	}
	for (const auto &d : spec.drivers) {
		if (!d.proxy_of) {
			continue;
		}
		const auto src =
		    std::find_if(columns.begin(), columns.end(), [&](const auto &c) { return c.name == *d.proxy_of; });
		if (src == columns.end()) {
			throw ConfigError(kModule, "driver '" + d.name + "' proxies another proxy");
		}
		std::mt19937_64 rng(derive_seed(spec.seed, "driver." + d.name));
		std::normal_distribution<double> z;
		std::vector<double> v(n);
		for (std::size_t t = 0; t < n; ++t) {
			v[t] = src->values[t] + d.proxy_noise * z(rng);
		}
		columns.push_back({d.name, d.tag, std::move(v)});
	}
	// Column order follows the spec, not generation order.
	std::vector<timeseries::Column> ordered;
	for (const auto &d : spec.drivers) {
		auto it = std::find_if(columns.begin(), columns.end(), [&](const auto &c) { return c.name == d.name; });
		for (std::size_t t = 0; t < n; ++t) {
			y[t] += d.coefficient * it->values[t];
		}
		ordered.push_back(std::move(*it));
	}

	std::vector<double> residual(n, 0.0);
	{
		std::mt19937_64 rng(derive_seed(spec.seed, "residual"));
		const auto u = unit_ar1(n, spec.residual_phi, rng);
		const double marginal = spec.residual_sd / std::sqrt(1.0 - spec.residual_phi * spec.residual_phi);
		for (std::size_t t = 0; t < n; ++t) {
			residual[t] = marginal * u[t];
		}
	}
	std::mt19937_64 noise_rng(derive_seed(spec.seed, "noise"));
	std::normal_distribution<double> z;
	for (std::size_t t = 0; t < n; ++t) {
		y[t] += seasonal(spec, start + static_cast<timeseries::HourStamp>(t)) + residual[t];
		if (spec.noise_sd > 0.0) {
			y[t] += spec.noise_sd * z(noise_rng);
		}
	}

	for (std::size_t t = spec.n_hours; t < n; ++t) {
		y[t] = timeseries::kMissing;
		for (auto &c : ordered) {
			if (c.tag == AvailabilityClass::real_time) {
				c.values[t] = timeseries::kMissing;
			}
		}
	}

	timeseries::Schema schema;
	for (const auto &c : ordered) {
		schema[c.name] = {c.tag, std::nullopt};
	}
	schema[spec.response] = {AvailabilityClass::real_time, std::nullopt};
	ordered.push_back({spec.response, AvailabilityClass::real_time, std::move(y)});
	return {timeseries::TimeFrame(start, std::move(ordered)), std::move(schema), std::move(residual)};
}

nlohmann::json ground_truth(const SyntheticSpec &spec) {
	nlohmann::json coefficients = nlohmann::json::object();
	for (const auto &d : spec.drivers) {
		coefficients[d.name] = d.coefficient;
	}
	return {
	    {"response", spec.response},
	    {"intercept", spec.intercept},
	    {"coefficients", std::move(coefficients)},
	    {"seasonal",
	     {{"daily", {{"amplitude", spec.daily_amplitude}, {"period_hours", 24.0}, {"form", "sin"}}},
	      {"weekly", {{"amplitude", spec.weekly_amplitude}, {"period_hours", 168.0}, {"form", "sin"}}},
	      {"yearly", {{"amplitude", spec.yearly_amplitude}, {"period_hours", kYearHours}, {"form", "cos"}}},
	      {"clock", "hours since 1970-01-01T00:00:00Z"}}},
	    {"residual", {{"ar", {spec.residual_phi}}, {"innovation_sd", spec.residual_sd}}},
	    {"noise_sd", spec.noise_sd},
	    {"seed", spec.seed},
	};
}

nlohmann::json to_json(const SyntheticSpec &spec) {
	auto drivers = nlohmann::json::array();
	for (const auto &d : spec.drivers) {
		nlohmann::json j{{"name", d.name},   {"tag", timeseries::to_string(d.tag)},
		                 {"coefficient", d.coefficient}, {"phi", d.phi},
		                 {"mean", d.mean},   {"sd", d.sd}};
		if (d.proxy_of) {
			j["proxy_of"] = *d.proxy_of;
			j["proxy_noise"] = d.proxy_noise;
		}
		drivers.push_back(std::move(j));
	}
	return {{"n_hours", spec.n_hours},
	        {"forecast_hours", spec.forecast_hours},
	        {"start", spec.start},
	        {"response", spec.response},
	        {"intercept", spec.intercept},
	        {"drivers", std::move(drivers)},
	        {"daily_amplitude", spec.daily_amplitude},
	        {"weekly_amplitude", spec.weekly_amplitude},
	        {"yearly_amplitude", spec.yearly_amplitude},
	        {"residual_phi", spec.residual_phi},
	        {"residual_sd", spec.residual_sd},
	        {"noise_sd", spec.noise_sd},
	        {"seed", spec.seed}};
}

SyntheticSpec spec_from_json(const nlohmann::json &j) {
	try {
		SyntheticSpec s = default_spec();
		s.n_hours = j.value("n_hours", s.n_hours);
		s.forecast_hours = j.value("forecast_hours", s.forecast_hours);
		s.start = j.value("start", s.start);
		s.response = j.value("response", s.response);
		s.intercept = j.value("intercept", s.intercept);
		s.daily_amplitude = j.value("daily_amplitude", s.daily_amplitude);
		s.weekly_amplitude = j.value("weekly_amplitude", s.weekly_amplitude);
		s.yearly_amplitude = j.value("yearly_amplitude", s.yearly_amplitude);
		s.residual_phi = j.value("residual_phi", s.residual_phi);
		s.residual_sd = j.value("residual_sd", s.residual_sd);
		s.noise_sd = j.value("noise_sd", s.noise_sd);
		s.seed = j.value("seed", s.seed);
		if (j.contains("drivers")) {
			s.drivers.clear();
			for (const auto &d : j.at("drivers")) {
				Driver out;
				out.name = d.at("name").get<std::string>();
				out.tag = timeseries::parse_availability(d.value("tag", std::string("market_data")));
				out.coefficient = d.value("coefficient", 0.0);
				out.phi = d.value("phi", out.phi);
				out.mean = d.value("mean", 0.0);
				out.sd = d.value("sd", 1.0);
				if (d.contains("proxy_of")) {
					out.proxy_of = d.at("proxy_of").get<std::string>();
					out.proxy_noise = d.value("proxy_noise", 0.0);
				}
				s.drivers.push_back(std::move(out));
			}
		}
		s.validate();
		return s;
	} catch (const nlohmann::json::exception &e) {
		throw ConfigError(kModule, std::string("malformed synthetic spec: ") + e.what());
	}
}

void write(const SyntheticSpec &spec, const std::filesystem::path &dir) {
	const Generated g = generate(spec);
	std::error_code ec;
	std::filesystem::create_directories(dir, ec);
	if (ec) {
		throw ConfigError(kModule, "cannot create " + dir.string() + ": " + ec.message());
	}
	io::write_file_atomic(dir / "data.csv", timeseries::to_csv(g.frame));
	io::write_file_atomic(dir / "schema.json", timeseries::dump_schema(g.schema));
	io::write_file_atomic(dir / "truth.json", ground_truth(spec).dump(2) + "\n");
}

} // namespace gridcast::synth
