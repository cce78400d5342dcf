#include "gridcast/arima.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"
#include "gridcast/seed.hpp"
#include "gridcast/synth.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <set>

using namespace gridcast;
using Catch::Matchers::WithinAbs;

namespace {

std::filesystem::path scratch(const std::string &name) {
	auto dir = std::filesystem::temp_directory_path() / ("gridcast_synth_" + name);
	std::filesystem::remove_all(dir);
	return dir;
}

} // namespace

TEST_CASE("derived seeds differ per label and are stable", "[seed]") {
	std::set<std::uint64_t> seen;
	for (const char *label : {"driver.load", "driver.wind", "residual", "noise"}) {
		seen.insert(derive_seed(42, label));
	}
	CHECK(seen.size() == 4);
	CHECK(derive_seed(42, "noise") == derive_seed(42, "noise"));
	CHECK(derive_seed(42, "noise") != derive_seed(43, "noise"));
}

TEST_CASE("noise-free response is reproduced from the ground truth", "[synth]") {
	auto spec = synth::default_spec();
	spec.n_hours = 2000;
	spec.noise_sd = 0.0;
	spec.residual_sd = 0.0;
	const auto g = synth::generate(spec);
	const auto truth = synth::ground_truth(spec);

	// Recompute from the CSV round trip, as a consumer of the files would.
	const auto frame = timeseries::parse_csv(timeseries::to_csv(g.frame), g.schema);
	const double two_pi = 2.0 * 3.14159265358979323846;
	const auto y = frame.values("co2");
	double worst = 0.0;
	REQUIRE(frame.rows() == 2024);
	for (std::size_t t = 0; t < 2000; ++t) {
		double v = truth["intercept"].get<double>();
		for (const auto &[name, coef] : truth["coefficients"].items()) {
			v += coef.get<double>() * frame.values(name)[t];
		}
		const auto s = static_cast<double>(frame.stamp(t));
		const auto &sea = truth["seasonal"];
		v += sea["daily"]["amplitude"].get<double>() * std::sin(two_pi * s / 24.0);
		v += sea["weekly"]["amplitude"].get<double>() * std::sin(two_pi * s / 168.0);
		v += sea["yearly"]["amplitude"].get<double>() * std::cos(two_pi * s / sea["yearly"]["period_hours"].get<double>());
		worst = std::max(worst, std::abs(v - y[t]));
	}
	CHECK(worst < 1e-9);
	for (double r : g.residual) {
		REQUIRE(r == 0.0);
	}
}

TEST_CASE("same seed writes byte-identical files", "[synth]") {
	auto spec = synth::default_spec();
	spec.n_hours = 500;
	const auto a = scratch("a");
	const auto b = scratch("b");
	synth::write(spec, a);
	synth::write(spec, b);
	for (const char *f : {"data.csv", "schema.json", "truth.json"}) {
		CHECK(io::read_file(a / f) == io::read_file(b / f));
	}
	spec.seed = 7;
	const auto c = scratch("c");
	synth::write(spec, c);
	CHECK(io::read_file(a / "data.csv") != io::read_file(c / "data.csv"));
	std::filesystem::remove_all(a);
	std::filesystem::remove_all(b);
	std::filesystem::remove_all(c);
}

TEST_CASE("generated residual has the planted lag-1 autocorrelation", "[synth]") {
	auto spec = synth::default_spec();
	spec.n_hours = 10000;
	for (double phi : {0.3, 0.8}) {
		spec.residual_phi = phi;
		const auto g = synth::generate(spec);
		const auto rep = arima::acf(g.residual, 3);
		CHECK_THAT(rep.values[0], WithinAbs(phi, 0.05));
		CHECK_THAT(rep.values[1], WithinAbs(phi * phi, 0.05));
	}
}

TEST_CASE("drivers follow their AR(1) law and tags", "[synth]") {
	auto spec = synth::default_spec();
	spec.n_hours = 20000;
	const auto g = synth::generate(spec);
	for (const auto &d : spec.drivers) {
		CHECK(g.schema.at(d.name).tag == d.tag);
		if (d.proxy_of) {
			continue;
		}
		const auto x = g.frame.values(d.name);
		const auto rep = arima::acf(x.first(20000), 1);
		CHECK_THAT(rep.values[0], WithinAbs(d.phi, 0.05));
	}
	CHECK(g.frame.columns().back().name == "co2");
	REQUIRE(g.frame.rows() == 20024);
	// The trailing block is what is known at a forecast origin.
	for (std::size_t t = 20000; t < 20024; ++t) {
		CHECK(timeseries::is_missing(g.frame.values("co2")[t]));
		CHECK(timeseries::is_missing(g.frame.values("flow")[t]));
		CHECK_FALSE(timeseries::is_missing(g.frame.values("wind")[t]));
		CHECK_FALSE(timeseries::is_missing(g.frame.values("load")[t]));
	}
	CHECK_FALSE(timeseries::is_missing(g.frame.values("co2")[19999]));
}

TEST_CASE("invalid specs are configuration errors", "[synth]") {
	auto spec = synth::default_spec();
	spec.noise_sd = -1.0;
	CHECK_THROWS_AS(synth::generate(spec), ConfigError);
	spec = synth::default_spec();
	spec.residual_phi = 1.0;
	CHECK_THROWS_AS(synth::generate(spec), ConfigError);
	spec = synth::default_spec();
	spec.drivers[2].proxy_of = "nope";
	CHECK_THROWS_AS(synth::generate(spec), ConfigError);
	spec = synth::default_spec();
	spec.drivers[0].name = "co2";
	CHECK_THROWS_AS(synth::generate(spec), ConfigError);
}

TEST_CASE("spec JSON round trip", "[synth]") {
	auto spec = synth::default_spec();
	spec.seed = 99;
	spec.n_hours = 1234;
	const auto back = synth::spec_from_json(synth::to_json(spec));
	CHECK(synth::to_json(back) == synth::to_json(spec));
}
