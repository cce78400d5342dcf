#include "gridcast/ensemble.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/synth.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

using namespace gridcast;
using namespace gridcast::ensemble;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using timeseries::AvailabilityClass;

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

PipelineOptions small_options() {
	PipelineOptions o;
	o.n_splits = 4;
	o.validation_len = 168;
	o.test_len = 168;
	return o;
}

// y = intercept + sum(coef * driver) + noise, iid drivers, no seasonality.
timeseries::TimeFrame linear_frame(std::uint64_t seed, std::size_t n, const std::vector<double> &coef,
                                   double noise_sd, bool product = false) {
	std::mt19937_64 rng(seed);
	std::normal_distribution<double> z;
	const AvailabilityClass tags[] = {AvailabilityClass::market_data, AvailabilityClass::short_term_forecast};
	std::vector<timeseries::Column> cols;
	std::vector<double> y(n, 3.0);
	for (std::size_t j = 0; j < coef.size(); ++j) {
		std::vector<double> x(n);
		for (auto &v : x) {
			v = z(rng);
		}
		for (std::size_t t = 0; t < n; ++t) {
			y[t] += coef[j] * x[t];
		}
		cols.push_back({"x" + std::to_string(j), tags[j % 2], std::move(x)});
	}
	if (product) {
		for (std::size_t t = 0; t < n; ++t) {
			y[t] += cols[0].values[t] * cols[1].values[t];
		}
	}
	for (auto &v : y) {
		v += noise_sd * z(rng);
	}
	cols.push_back({"y", AvailabilityClass::real_time, std::move(y)});
	return {timeseries::parse_timestamp("2017-01-02T00:00:00Z"), std::move(cols)};
}

synth::SyntheticSpec small_spec(std::uint64_t seed) {
	auto s = synth::default_spec();
	s.n_hours = 2600;
	s.seed = seed;
	return s;
}

CompoundOptions m1_only() {
	CompoundOptions o;
	o.pipeline = small_options();
	o.members = {basis::Variant::M1};
	return o;
}

std::filesystem::path scratch(const std::string &name) {
	auto p = std::filesystem::temp_directory_path() / ("gridcast_test_" + name);
	std::filesystem::remove_all(p);
	return p;
}

} // namespace

TEST_CASE("softmax reproduces the published weight rows", "[softmax]") {
	const double avg[] = {39.63, 38.97, 39.19};
	const auto w = softmax_weights(avg);
	CHECK(round2(w[0]) == 0.22);
	CHECK(round2(w[1]) == 0.43);
	CHECK(round2(w[2]) == 0.35);

	// The marginal row rounds to (0.07, 0.72, 0.20); the published 0.73 is
	// not reachable from the printed RMSEs, so the middle value is checked
	// against a direct exp/sum evaluation instead.
	const double marg[] = {11.06, 8.77, 10.03};
	const auto m = softmax_weights(marg);
	const double e0 = std::exp(-11.06), e1 = std::exp(-8.77), e2 = std::exp(-10.03);
	CHECK_THAT(m[1], WithinAbs(e1 / (e0 + e1 + e2), 1e-14));
	CHECK(round2(m[0]) == 0.07);
	CHECK(round2(m[2]) == 0.20);
}

TEST_CASE("softmax properties", "[softmax]") {
	std::mt19937_64 rng(7);
	std::uniform_real_distribution<double> u(0.0, 50.0);
	for (int trial = 0; trial < 200; ++trial) {
		std::vector<double> r(2 + static_cast<std::size_t>(trial % 5));
		for (auto &v : r) {
			v = u(rng);
		}
		const auto w = softmax_weights(r);
		double sum = 0.0;
		for (double v : w) {
			REQUIRE(v > 0.0);
			sum += v;
		}
		CHECK_THAT(sum, WithinAbs(1.0, 1e-12));

		auto shifted = r;
		for (auto &v : shifted) {
			v += 17.25;
		}
		const auto ws = softmax_weights(shifted);
		for (std::size_t i = 0; i < w.size(); ++i) {
			CHECK_THAT(ws[i], WithinAbs(w[i], 1e-12));
		}
		for (std::size_t i = 0; i < r.size(); ++i) {
			for (std::size_t j = 0; j < r.size(); ++j) {
				if (r[i] < r[j]) {
					CHECK(w[i] > w[j]);
				}
			}
		}
		const auto best = std::min_element(r.begin(), r.end()) - r.begin();
		CHECK(std::max_element(w.begin(), w.end()) - w.begin() == best);
	}
	const double equal[] = {4.0, 4.0, 4.0, 4.0};
	for (double v : softmax_weights(equal)) {
		CHECK_THAT(v, WithinAbs(0.25, 1e-15));
	}
	// Large RMSEs would underflow without the shift.
	const double large[] = {2000.0, 2001.0};
	const auto wl = softmax_weights(large);
	CHECK_THAT(wl[0], WithinAbs(1.0 / (1.0 + std::exp(-1.0)), 1e-14));
}

TEST_CASE("softmax rejects invalid input", "[softmax]") {
	CHECK_THROWS_AS(softmax_weights(std::span<const double>{}), ConfigError);
	const double neg[] = {1.0, -0.5};
	CHECK_THROWS_AS(softmax_weights(neg), ConfigError);
	const double nan[] = {1.0, std::nan("")};
	CHECK_THROWS_AS(softmax_weights(nan), ConfigError);
	const double inf[] = {1.0, INFINITY};
	CHECK_THROWS_AS(softmax_weights(inf), ConfigError);
}

TEST_CASE("M0 recovers planted coefficients within two standard errors", "[base]") {
	const std::vector<double> coef{1.5, -2.0};
	int covered = 0, total = 0;
	for (std::uint64_t seed = 1; seed <= 20; ++seed) {
		const auto frame = linear_frame(seed, 1500, coef, 1.0);
		const auto p = build_base_model(basis::Variant::M0, frame, "y", 1, small_options());
		for (std::size_t j = 0; j < coef.size(); ++j) {
			const std::string id = "x[x" + std::to_string(j) + "]";
			const auto &f = p.model.features;
			const auto it = std::find_if(f.begin(), f.end(), [&](const auto &x) { return x.id() == id; });
			REQUIRE(it != f.end());
			const auto k = static_cast<Eigen::Index>(it - f.begin()) + 1;
			const double se = std::sqrt(p.model.sigma2 * p.model.xtx_inv(k, k));
			++total;
			covered += std::abs(p.model.beta(k) - coef[j]) <= 2.0 * se ? 1 : 0;
		}
	}
	// Nominal 95.4% per coefficient; 34/40 has binomial tail probability < 1%.
	CHECK(covered >= 34);
	INFO(covered << "/" << total);
}

TEST_CASE("M2 keeps a planted product in at least 90% of trials", "[base]") {
	int kept = 0;
	const int trials = 10;
	for (int seed = 1; seed <= trials; ++seed) {
		const auto frame = linear_frame(100 + static_cast<std::uint64_t>(seed), 1500, {1.0, 1.0}, 0.5, true);
		const auto opt = small_options();
		const auto pool = interaction_pool(frame, "y", 1, opt);
		const auto p = build_base_model(basis::Variant::M2, frame, "y", 1, opt, pool);
		const bool hit = std::any_of(p.model.features.begin(), p.model.features.end(), [](const auto &f) {
			const auto id = f.id();
			return id == "x[x0]*x[x1]" || id == "x[x1]*x[x0]";
		});
		kept += hit ? 1 : 0;
	}
	CHECK(kept >= 9);
}

TEST_CASE("M1 recipe carries exactly fifteen tau columns", "[base]") {
	const auto g = synth::generate(small_spec(3));
	const auto r = make_recipe(basis::Variant::M1, g.frame, "co2", 1, small_options());
	const auto d = basis::build_design(g.frame, 1, r);
	const auto &prov = d.X.provenance();
	const auto taus = std::count_if(prov.begin(), prov.end(),
	                                [](const auto &f) { return f.kind == basis::FeatureKind::tau; });
	CHECK(taus == 15);
}

TEST_CASE("make_recipe validates columns", "[base]") {
	const auto g = synth::generate(small_spec(3));
	auto o = small_options();
	CHECK_THROWS_AS(make_recipe(basis::Variant::M1, g.frame, "nope", 1, o), ConfigError);
	o.columns = {"load", "missing_col"};
	CHECK_THROWS_WITH(make_recipe(basis::Variant::M1, g.frame, "co2", 1, o), ContainsSubstring("missing_col"));
	// flow is real_time and stays available; wind_fc is a weather forecast.
	o.columns = {"load", "flow"};
	const auto r = make_recipe(basis::Variant::M1, g.frame, "co2", 12, o);
	CHECK(r.columns == std::vector<std::string>{"load", "flow"});
}

TEST_CASE("weighted ensemble edge cases", "[weighted]") {
	const auto g = synth::generate(small_spec(5));
	const auto opt = small_options();
	const auto m1 = build_base_model(basis::Variant::M1, g.frame, "co2", 2, opt);

	SECTION("single member") {
		const auto e = build_weighted({m1});
		REQUIRE(e.weights.size() == 1);
		CHECK(e.weights[0] == 1.0);
		const std::vector<std::size_t> origins{2000, 2100, 2500};
		const auto pe = predict(e, g.frame, origins);
		const auto pm = predict(m1, g.frame, origins);
		for (std::size_t i = 0; i < origins.size(); ++i) {
			CHECK_THAT(pe[i].point, WithinAbs(pm[i].point, 1e-12));
			CHECK_THAT(pe[i].lo, WithinAbs(pm[i].lo, 1e-12));
			CHECK_THAT(pe[i].hi, WithinAbs(pm[i].hi, 1e-12));
		}
		CHECK_THAT(e.evaluation.mean_validation_rmse, WithinAbs(m1.evaluation.mean_validation_rmse, 1e-12));
	}
	SECTION("identical members") {
		const auto e = build_weighted({m1, m1});
		CHECK_THAT(e.weights[0], WithinAbs(0.5, 1e-15));
		const std::vector<std::size_t> origins{2300};
		CHECK_THAT(predict(e, g.frame, origins)[0].point, WithinAbs(predict(m1, g.frame, origins)[0].point, 1e-10));
	}
	SECTION("mismatched members") {
		auto other = m1;
		other.horizon = 3;
		CHECK_THROWS_AS(build_weighted({m1, other}), ConfigError);
		CHECK_THROWS_AS(build_weighted({}), ConfigError);
	}
}

TEST_CASE("ensemble validation RMSE does not exceed the worst member", "[weighted]") {
	const auto g = synth::generate(small_spec(11));
	CompoundOptions o;
	o.pipeline = small_options();
	o.pipeline.interaction_pool = 15;
	const auto e = build_horizon(g.frame, "co2", 8, o);
	REQUIRE(e.members.size() == 3);
	double worst = 0.0;
	for (const auto &m : e.members) {
		worst = std::max(worst, m.evaluation.mean_validation_rmse);
	}
	CHECK(e.evaluation.mean_validation_rmse <= worst);
	const double sum = e.weights[0] + e.weights[1] + e.weights[2];
	CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
}

TEST_CASE("horizon plans", "[plan]") {
	const auto avg = default_horizon_plan(ResponseKind::average);
	const auto mar = default_horizon_plan(ResponseKind::marginal);
	for (int h = 1; h <= 24; ++h) {
		CHECK(avg.at(h) == (h >= 3 && h <= 6 ? Route::corrected : Route::ensemble));
		CHECK(mar.at(h) == (h <= 6 ? Route::corrected : Route::ensemble));
	}
	CHECK(avg.ensemble_horizons().size() == 21);
	CHECK(mar.ensemble_horizons().size() == 19);
	CHECK_THROWS_AS((void)avg.at(0), ConfigError);
	CHECK_THROWS_AS((void)avg.at(25), ConfigError);

	const int none[] = {0};
	CHECK_THROWS_AS(horizon_plan(none), ConfigError);
	const int seven[] = {7};
	CHECK_THROWS_AS(horizon_plan(seven), ConfigError);
	const auto empty = horizon_plan(std::span<const int>{});
	CHECK_FALSE(empty.any_corrected());
	CHECK(empty.ensemble_horizons().size() == 24);

	CHECK(parse_kind("marginal") == ResponseKind::marginal);
	CHECK(to_string(ResponseKind::average) == "average");
	CHECK_THROWS_AS(parse_kind("median"), ConfigError);
}

TEST_CASE("build_compound wires factories per the plan", "[plan]") {
	const auto g = synth::generate(small_spec(2));
	for (const auto kind : {ResponseKind::average, ResponseKind::marginal}) {
		std::set<int> built;
		int corrector_calls = 0;
		CompoundOptions o;
		o.ensemble_factory = [&](int h) {
			built.insert(h);
			WeightedEnsemble e;
			e.horizon = h;
			return e;
		};
		o.corrector_factory = [&](const WeightedEnsemble &h6) {
			CHECK(h6.horizon == 6);
			++corrector_calls;
			return Corrector{};
		};
		const auto f = build_compound(g.frame, "co2", kind, o);
		CHECK(f.plan == default_horizon_plan(kind));
		const auto want = f.plan.ensemble_horizons();
		CHECK(built == std::set<int>(want.begin(), want.end()));
		CHECK(corrector_calls == 1);
		REQUIRE(f.corrector.has_value());
		for (int h = 1; h <= 24; ++h) {
			CHECK((f.ensembles.contains(h) || f.plan.at(h) == Route::corrected));
		}
	}

	CompoundOptions bad;
	bad.ensemble_factory = [](int) { return WeightedEnsemble{}; };
	bad.corrector_factory = [](const WeightedEnsemble &) { return Corrector{}; };
	CHECK_THROWS_AS(build_compound(g.frame, "co2", ResponseKind::average, bad), ConfigError);

	CompoundOptions custom = bad;
	custom.ensemble_factory = [](int h) {
		WeightedEnsemble e;
		e.horizon = h;
		return e;
	};
	custom.corrected_horizons = std::vector<int>{};
	const auto plain = build_compound(g.frame, "co2", ResponseKind::marginal, custom);
	CHECK_FALSE(plain.corrector.has_value());
	CHECK(plain.ensembles.size() == 24);
}

TEST_CASE("compound forecast on synthetic data", "[forecast]") {
	const auto spec = small_spec(21);
	const auto g = synth::generate(spec);
	const auto f = build_compound(g.frame, "co2", ResponseKind::marginal, m1_only());
	const std::size_t origin = spec.n_hours - 1;
	const auto rows = forecast_24h(f, g.frame, origin);

	REQUIRE(rows.size() == 24);
	for (std::size_t i = 0; i < rows.size(); ++i) {
		CHECK(rows[i].horizon == static_cast<int>(i) + 1);
		CHECK(rows[i].target == g.frame.stamp(origin) + static_cast<timeseries::HourStamp>(i) + 1);
		CHECK(rows[i].lo <= rows[i].point);
		CHECK(rows[i].point <= rows[i].hi);
		CHECK(rows[i].route == (i < 6 ? Route::corrected : Route::ensemble));
	}
	CHECK(rows[5].hi - rows[5].lo >= rows[0].hi - rows[0].lo);

	SECTION("corrected rows follow the shifted base plus the residual forecast") {
		const auto &h6 = f.ensembles.at(6);
		const auto resid = residual_series(h6, g.frame, "co2");
		std::size_t begin = origin + 1;
		while (begin > 0 && !std::isnan(resid[begin - 1]) && origin + 1 - begin < f.corrector->history_window) {
			--begin;
		}
		const std::vector<double> history(resid.begin() + static_cast<std::ptrdiff_t>(begin),
		                                  resid.begin() + static_cast<std::ptrdiff_t>(origin) + 1);
		const auto state = arima::filter(f.corrector->model, history);
		const auto fc = arima::forecast(f.corrector->model, state, 6);
		for (int h = 1; h <= 6; ++h) {
			const std::vector<std::size_t> s{origin + static_cast<std::size_t>(h) - 6};
			const auto b = predict(h6, g.frame, s)[0];
			const double point = b.point + fc.mean[static_cast<std::size_t>(h - 1)];
			const double half =
			    1.959963984540054 * std::sqrt(b.mean_variance + fc.variance[static_cast<std::size_t>(h - 1)]);
			const auto &r = rows[static_cast<std::size_t>(h - 1)];
			CHECK_THAT(r.point, WithinAbs(point, 1e-9));
			CHECK_THAT(r.hi - r.point, WithinAbs(half, 1e-9));
		}
	}

	SECTION("pure function of the serialized forecaster") {
		const auto dir = scratch("compound_roundtrip");
		save(f, dir);
		const auto loaded = load(dir);
		const auto again = forecast_24h(loaded, g.frame, origin);
		CHECK(forecast_csv(again) == forecast_csv(rows));
		CHECK(forecast_csv(forecast_24h(loaded, g.frame, origin)) == forecast_csv(again));
		CHECK(evaluation_json(loaded) == evaluation_json(f));

		std::filesystem::remove(dir / "corrector.json");
		std::filesystem::remove(dir / "ensemble_h07.json");
		try {
			(void)load(dir);
			FAIL("load accepted an incomplete directory");
		} catch (const DataError &e) {
			CHECK_THAT(e.what(), ContainsSubstring("corrector.json") && ContainsSubstring("ensemble_h07.json"));
		}
		std::filesystem::remove_all(dir);
	}

	SECTION("origin before feature availability") {
		CHECK_THROWS_WITH(forecast_24h(f, g.frame, 10), ContainsSubstring("horizon"));
		CHECK_THROWS_AS(forecast_24h(f, g.frame, g.frame.rows()), DataError);
	}

	SECTION("forecast_paths agrees with single forecasts") {
		const std::vector<std::size_t> origins{origin - 30, origin};
		const auto paths = forecast_paths(f, g.frame, origins);
		CHECK(forecast_csv(paths[1]) == forecast_csv(rows));
		CHECK(forecast_csv(paths[0]) == forecast_csv(forecast_24h(f, g.frame, origin - 30)));
	}

	SECTION("csv layout") {
		const auto csv = forecast_csv(rows);
		CHECK(csv.rfind("timestamp,horizon,point,lo95,hi95\n", 0) == 0);
		CHECK(std::count(csv.begin(), csv.end(), '\n') == 25);
	}
}

TEST_CASE("zero-variance system forecasts exactly", "[forecast]") {
	synth::SyntheticSpec s;
	s.n_hours = 2600;
	s.intercept = 5.0;
	s.daily_amplitude = s.weekly_amplitude = s.yearly_amplitude = 0.0;
	s.residual_sd = 0.0;
	s.noise_sd = 0.0;
	s.drivers = {{"load", AvailabilityClass::market_data, 2.0, 0.9, 10.0, 4.0, std::nullopt, 0.0}};
	const auto g = synth::generate(s);
	const auto f = build_compound(g.frame, "co2", ResponseKind::average, m1_only());
	const std::size_t origin = s.n_hours - 1;
	const auto rows = forecast_24h(f, g.frame, origin);
	const auto load = g.frame.values("load");
	for (const auto &r : rows) {
		const double truth = 5.0 + 2.0 * load[origin + static_cast<std::size_t>(r.horizon)];
		CHECK_THAT(r.point, WithinAbs(truth, 1e-8));
		CHECK(r.hi - r.lo < 1e-6);
	}
}

TEST_CASE("a served horizon subset trains only what it needs", "[plan]") {
	const auto spec = small_spec(8);
	const auto g = synth::generate(spec);
	auto o = m1_only();
	o.horizons = {9, 2, 2};
	const auto f = build_compound(g.frame, "co2", ResponseKind::marginal, o);
	CHECK(f.horizons == std::vector<int>{2, 9});
	CHECK(f.required_ensembles() == std::vector<int>{6, 9});
	CHECK(f.corrector.has_value());
	const auto rows = forecast_24h(f, g.frame, spec.n_hours - 1);
	REQUIRE(rows.size() == 2);
	CHECK(rows[0].horizon == 2);
	CHECK(rows[0].route == Route::corrected);
	CHECK(rows[1].horizon == 9);

	const auto dir = scratch("subset");
	save(f, dir);
	const auto loaded = load(dir);
	CHECK(loaded.horizons == f.horizons);
	CHECK(forecast_csv(forecast_24h(loaded, g.frame, spec.n_hours - 1)) == forecast_csv(rows));
	std::filesystem::remove_all(dir);

	o.horizons = {7, 8};
	CHECK_FALSE(build_compound(g.frame, "co2", ResponseKind::marginal, o).corrector.has_value());
	o.horizons = {25};
	CHECK_THROWS_AS(build_compound(g.frame, "co2", ResponseKind::marginal, o), ConfigError);
}
