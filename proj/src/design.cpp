#include "gridcast/design.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"
#include "gridcast/log.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace gridcast::basis {

using timeseries::is_missing;
using timeseries::kMissing;
using timeseries::TimeFrame;

namespace {

constexpr const char *kModule = "basis";

std::string format_period(double period, Clock clock) {
	std::string out = period == std::floor(period) ? std::to_string(static_cast<long long>(period))
	                                               : io::format_double(period);
	if (clock == Clock::month) {
		out += "m";
	}
	return out;
}

const char *kind_name(FeatureKind kind) {
	switch (kind) {
	case FeatureKind::current:
		return "current";
	case FeatureKind::moving_average:
		return "moving_average";
	case FeatureKind::response_lag:
		return "response_lag";
	case FeatureKind::fourier_sin:
		return "fourier_sin";
	case FeatureKind::fourier_cos:
		return "fourier_cos";
	case FeatureKind::tau:
		return "tau";
	case FeatureKind::exp_standardized:
		return "exp_standardized";
	case FeatureKind::bspline:
		return "bspline";
	case FeatureKind::nspline:
		return "nspline";
	case FeatureKind::product:
		return "product";
	}
	return "";
}

FeatureKind parse_kind(const std::string &text) {
	for (auto k : {FeatureKind::current, FeatureKind::moving_average, FeatureKind::response_lag,
	               FeatureKind::fourier_sin, FeatureKind::fourier_cos, FeatureKind::tau,
	               FeatureKind::exp_standardized, FeatureKind::bspline, FeatureKind::nspline,
	               FeatureKind::product}) {
		if (text == kind_name(k)) {
			return k;
		}
	}
	throw ConfigError(kModule, "unknown feature kind '" + text + "'");
}

std::size_t expected_operands(FeatureKind kind) {
	switch (kind) {
	case FeatureKind::exp_standardized:
	case FeatureKind::bspline:
	case FeatureKind::nspline:
		return 1;
	case FeatureKind::product:
		return 2;
	default:
		return 0;
	}
}

void collect_columns(const Feature &f, std::set<std::string> &out) {
	if (f.kind == FeatureKind::current || f.kind == FeatureKind::moving_average) {
		out.insert(f.column);
	}
	for (const auto &op : f.operands) {
		collect_columns(op, out);
	}
}

std::string join(const std::vector<std::string> &items) {
	std::string out;
	for (const auto &s : items) {
		out += out.empty() ? "" : ", ";
		out += s;
	}
	return out;
}

bool is_constant(const std::vector<double> &v) {
	return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

} // namespace

std::string Feature::id() const {
	switch (kind) {
	case FeatureKind::current:
		return "x[" + column + "]";
	case FeatureKind::moving_average:
		return "ma" + std::to_string(window) + "[" + column + "]";
	case FeatureKind::response_lag:
		return "lag[" + column + "]";
	case FeatureKind::fourier_sin:
		return "fs" + format_period(period, clock) + ".sin" + std::to_string(order);
	case FeatureKind::fourier_cos:
		return "fs" + format_period(period, clock) + ".cos" + std::to_string(order);
	case FeatureKind::tau:
		return "tau." + tau_names().at(static_cast<std::size_t>(index));
	case FeatureKind::exp_standardized:
		return "exp(" + operands.at(0).id() + ")";
	case FeatureKind::bspline:
		return "bs" + std::to_string(index) + "(" + operands.at(0).id() + ")";
	case FeatureKind::nspline:
		return "ns" + std::to_string(index) + "(" + operands.at(0).id() + ")";
	case FeatureKind::product:
		return operands.at(0).id() + "*" + operands.at(1).id();
	}
	return {};
}

Feature current(std::string column) {
	Feature f;
	f.kind = FeatureKind::current;
	f.column = std::move(column);
	return f;
}

Feature moving_average(std::string column, std::size_t window) {
	if (window == 0) {
		throw ConfigError(kModule, "moving average window must be positive");
	}
	Feature f;
	f.kind = FeatureKind::moving_average;
	f.column = std::move(column);
	f.window = window;
	return f;
}

Feature response_lag(std::string response) {
	Feature f;
	f.kind = FeatureKind::response_lag;
	f.column = std::move(response);
	return f;
}

Feature fourier(bool sine, int order, double period, Clock clock) {
	if (order < 1 || !(period > 0.0)) {
		throw ConfigError(kModule, "fourier feature needs order >= 1 and period > 0");
	}
	Feature f;
	f.kind = sine ? FeatureKind::fourier_sin : FeatureKind::fourier_cos;
	f.order = order;
	f.period = period;
	f.clock = clock;
	return f;
}

Feature tau(int index) {
	if (index < 0 || index >= static_cast<int>(kTauWidth)) {
		throw ConfigError(kModule, "tau index out of range");
	}
	Feature f;
	f.kind = FeatureKind::tau;
	f.index = index;
	return f;
}

Feature exp_standardized(Feature operand, double mean, double scale) {
	if (!(scale > 0.0)) {
		throw ConfigError(kModule, "exp standardization needs a positive scale");
	}
	Feature f;
	f.kind = FeatureKind::exp_standardized;
	f.mean = mean;
	f.scale = scale;
	f.operands.push_back(std::move(operand));
	return f;
}

Feature bspline(Feature operand, KnotVector knots, int index) {
	knots.validate();
	if (index < 0 || index >= static_cast<int>(knots.interior.size()) + 4) {
		throw ConfigError(kModule, "bspline index out of range");
	}
	Feature f;
	f.kind = FeatureKind::bspline;
	f.knots = std::move(knots);
	f.index = index;
	f.operands.push_back(std::move(operand));
	return f;
}

Feature nspline(Feature operand, KnotVector knots, int index) {
	knots.validate();
	if (index < 0 || index >= static_cast<int>(knots.interior.size()) + 1) {
		throw ConfigError(kModule, "nspline index out of range");
	}
	Feature f;
	f.kind = FeatureKind::nspline;
	f.knots = std::move(knots);
	f.index = index;
	f.operands.push_back(std::move(operand));
	return f;
}

Feature product(Feature a, Feature b) {
	Feature f;
	f.kind = FeatureKind::product;
	f.operands.push_back(std::move(a));
	f.operands.push_back(std::move(b));
	return f;
}

nlohmann::json to_json(const Feature &f) {
	nlohmann::json j;
	j["kind"] = kind_name(f.kind);
	switch (f.kind) {
	case FeatureKind::current:
	case FeatureKind::response_lag:
		j["column"] = f.column;
		break;
	case FeatureKind::moving_average:
		j["column"] = f.column;
		j["window"] = f.window;
		break;
	case FeatureKind::fourier_sin:
	case FeatureKind::fourier_cos:
		j["order"] = f.order;
		j["period"] = f.period;
		j["clock"] = f.clock == Clock::hour ? "hour" : "month";
		break;
	case FeatureKind::tau:
		j["index"] = f.index;
		break;
	case FeatureKind::exp_standardized:
		j["mean"] = f.mean;
		j["scale"] = f.scale;
		break;
	case FeatureKind::bspline:
	case FeatureKind::nspline:
		j["index"] = f.index;
		j["knots"] = {{"lo", f.knots.lo}, {"hi", f.knots.hi}, {"interior", f.knots.interior}};
		break;
	case FeatureKind::product:
		break;
	}
	if (!f.operands.empty()) {
		auto ops = nlohmann::json::array();
		for (const auto &op : f.operands) {
			ops.push_back(to_json(op));
		}
		j["operands"] = std::move(ops);
	}
	return j;
}

Feature feature_from_json(const nlohmann::json &j) {
	try {
		Feature f;
		f.kind = parse_kind(j.at("kind").get<std::string>());
		f.column = j.value("column", std::string{});
		f.window = j.value("window", std::size_t{0});
		f.order = j.value("order", 0);
		f.period = j.value("period", 0.0);
		f.clock = j.value("clock", std::string{"hour"}) == "month" ? Clock::month : Clock::hour;
		f.index = j.value("index", 0);
		f.mean = j.value("mean", 0.0);
		f.scale = j.value("scale", 1.0);
		if (j.contains("knots")) {
			const auto &k = j.at("knots");
			f.knots = KnotVector{k.at("lo").get<double>(), k.at("hi").get<double>(),
			                     k.at("interior").get<std::vector<double>>()};
			f.knots.validate();
		}
		if (j.contains("operands")) {
			for (const auto &op : j.at("operands")) {
				f.operands.push_back(feature_from_json(op));
			}
		}
		if (f.operands.size() != expected_operands(f.kind)) {
			throw ConfigError(kModule, std::string("wrong operand count for ") + kind_name(f.kind));
		}
		if (f.kind == FeatureKind::tau && (f.index < 0 || f.index >= static_cast<int>(kTauWidth))) {
			throw ConfigError(kModule, "tau index out of range");
		}
		return f;
	} catch (const nlohmann::json::exception &e) {
		throw ConfigError(kModule, std::string("malformed feature: ") + e.what());
	}
}

Evaluator::Evaluator(const TimeFrame &frame, std::string response, int horizon, std::vector<std::size_t> origins)
    : frame_(frame), response_(std::move(response)), horizon_(horizon), origins_(std::move(origins)) {
	if (horizon_ < 0) {
		throw ConfigError(kModule, "negative horizon");
	}
}

std::vector<double> Evaluator::leaf(const Feature &f) const {
	std::vector<double> out(origins_.size(), kMissing);
	const auto h = static_cast<std::size_t>(horizon_);
	switch (f.kind) {
	case FeatureKind::current: {
		const auto &col = frame_.column(f.column);
		const std::size_t shift = timeseries::is_forecast_class(col.tag) ? h : 0;
		for (std::size_t r = 0; r < origins_.size(); ++r) {
			const std::size_t row = origins_[r] + shift;
			if (row < frame_.rows()) {
				out[r] = col.values[row];
			}
		}
		break;
	}
	case FeatureKind::moving_average: {
		const auto values = frame_.values(f.column);
		for (std::size_t r = 0; r < origins_.size(); ++r) {
			if (origins_[r] < values.size()) {
				out[r] = timeseries::window_mean(values, origins_[r], f.window);
			}
		}
		break;
	}
	case FeatureKind::response_lag: {
		const auto values = frame_.values(f.column);
		for (std::size_t r = 0; r < origins_.size(); ++r) {
			if (origins_[r] < values.size()) {
				out[r] = values[origins_[r]];
			}
		}
		break;
	}
	case FeatureKind::fourier_sin:
	case FeatureKind::fourier_cos: {
		const std::size_t slot = 2 * static_cast<std::size_t>(f.order - 1) + (f.kind == FeatureKind::fourier_cos ? 1 : 0);
		for (std::size_t r = 0; r < origins_.size(); ++r) {
			const auto stamp = frame_.stamp(origins_[r]) + horizon_;
			const double clock = f.clock == Clock::hour ? static_cast<double>(stamp)
			                                            : static_cast<double>(timeseries::calendar(stamp).month_index);
			out[r] = fourier_terms(clock, f.order, f.period)[slot];
		}
		break;
	}
	case FeatureKind::tau: {
		for (std::size_t r = 0; r < origins_.size(); ++r) {
			out[r] = tau_row(frame_.stamp(origins_[r]) + horizon_)[static_cast<std::size_t>(f.index)];
		}
		break;
	}
	default:
		throw std::logic_error("leaf() on a composite feature");
	}
	return out;
}

const std::vector<double> &Evaluator::cached(const Feature &f) {
	auto key = f.id();
	if (auto it = cache_.find(key); it != cache_.end()) {
		return it->second;
	}
	auto values = evaluate(f);
	return cache_.emplace(std::move(key), std::move(values)).first->second;
}

std::vector<double> Evaluator::evaluate(const Feature &f) {
	switch (f.kind) {
	case FeatureKind::exp_standardized: {
		const auto &a = cached(f.operands[0]);
		std::vector<double> out(a.size());
		for (std::size_t r = 0; r < a.size(); ++r) {
			out[r] = std::exp((a[r] - f.mean) / f.scale);
		}
		return out;
	}
	case FeatureKind::bspline:
	case FeatureKind::nspline: {
		const auto &a = cached(f.operands[0]);
		std::vector<double> out(a.size(), kMissing);
		const auto k = static_cast<std::size_t>(f.index);
		if (f.kind == FeatureKind::bspline) {
			const BSplineBasis basis(f.knots);
			std::vector<double> buf(basis.size());
			for (std::size_t r = 0; r < a.size(); ++r) {
				if (!is_missing(a[r])) {
					basis.evaluate(a[r], buf);
					out[r] = buf[k];
				}
			}
		} else {
			const NaturalSplineBasis basis(f.knots);
			std::vector<double> buf(basis.size());
			for (std::size_t r = 0; r < a.size(); ++r) {
				if (!is_missing(a[r])) {
					basis.evaluate(a[r], buf);
					out[r] = buf[k];
				}
			}
		}
		return out;
	}
	case FeatureKind::product: {
		const auto &a = cached(f.operands[0]);
		const auto &b = cached(f.operands[1]);
		std::vector<double> out(a.size());
		for (std::size_t r = 0; r < a.size(); ++r) {
			out[r] = a[r] * b[r];
		}
		return out;
	}
	default:
		return leaf(f);
	}
}

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd data, std::vector<Feature> provenance, std::vector<std::size_t> origins)
    : data_(std::move(data)), provenance_(std::move(provenance)), origins_(std::move(origins)) {
	if (static_cast<std::size_t>(data_.cols()) != provenance_.size() ||
	    static_cast<std::size_t>(data_.rows()) != origins_.size()) {
		throw ConfigError(kModule, "feature matrix shape does not match provenance/origins");
	}
}

std::vector<std::string> FeatureMatrix::names() const {
	std::vector<std::string> out;
	out.reserve(provenance_.size());
	for (const auto &f : provenance_) {
		out.push_back(f.id());
	}
	return out;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> columns) const {
	Eigen::MatrixXd data(data_.rows(), static_cast<Eigen::Index>(columns.size()));
	std::vector<Feature> prov;
	prov.reserve(columns.size());
	for (std::size_t c = 0; c < columns.size(); ++c) {
		data.col(static_cast<Eigen::Index>(c)) = data_.col(static_cast<Eigen::Index>(columns[c]));
		prov.push_back(provenance_.at(columns[c]));
	}
	return {std::move(data), std::move(prov), origins_};
}

std::string_view to_string(Variant variant) {
	switch (variant) {
	case Variant::M0:
		return "M0";
	case Variant::M1:
		return "M1";
	case Variant::M2:
		return "M2";
	case Variant::M3:
		return "M3";
	}
	return "";
}

Variant parse_variant(std::string_view text) {
	for (auto v : {Variant::M0, Variant::M1, Variant::M2, Variant::M3}) {
		if (text == to_string(v)) {
			return v;
		}
	}
	throw ConfigError(kModule, "unknown model variant '" + std::string(text) + "'");
}

nlohmann::json to_json(const Recipe &r) {
	nlohmann::json j;
	j["variant"] = std::string(to_string(r.variant));
	j["response"] = r.response;
	j["columns"] = r.columns;
	j["ma_windows"] = r.ma_windows;
	j["interaction_pool"] = r.interaction_pool;
	j["bs_count"] = r.bs_count;
	j["ns_count"] = r.ns_count;
	auto pool = nlohmann::json::array();
	for (const auto &f : r.pool) {
		pool.push_back(to_json(f));
	}
	j["pool"] = std::move(pool);
	return j;
}

Recipe recipe_from_json(const nlohmann::json &j) {
	try {
		Recipe r;
		r.variant = parse_variant(j.at("variant").get<std::string>());
		r.response = j.value("response", std::string{});
		r.columns = j.value("columns", std::vector<std::string>{});
		r.ma_windows = j.value("ma_windows", r.ma_windows);
		r.interaction_pool = j.value("interaction_pool", r.interaction_pool);
		r.bs_count = j.value("bs_count", r.bs_count);
		r.ns_count = j.value("ns_count", r.ns_count);
		if (j.contains("pool")) {
			for (const auto &f : j.at("pool")) {
				r.pool.push_back(feature_from_json(f));
			}
		}
		return r;
	} catch (const nlohmann::json::exception &e) {
		throw ConfigError(kModule, std::string("malformed recipe: ") + e.what());
	}
}

std::vector<std::string> available_columns(const TimeFrame &frame, std::string_view response, int horizon) {
	std::vector<std::string> out;
	for (const auto &c : frame.columns()) {
		if (c.name != response && timeseries::available_for_horizon(c.tag, horizon)) {
			out.push_back(c.name);
		}
	}
	return out;
}

std::vector<Feature> base_features(const Recipe &recipe) {
	std::vector<Feature> out;
	for (const auto &c : recipe.columns) {
		out.push_back(current(c));
		for (auto w : recipe.ma_windows) {
			out.push_back(moving_average(c, w));
		}
	}
	out.push_back(response_lag(recipe.response));
	return out;
}

std::vector<Feature> fourier_features() {
	struct Spec {
		int n;
		double period;
		Clock clock;
	};
	std::vector<Feature> out;
	for (const Spec &s : {Spec{2, 24.0, Clock::hour}, Spec{1, 168.0, Clock::hour}, Spec{2, 12.0, Clock::month}}) {
		for (int i = 1; i <= s.n; ++i) {
			out.push_back(fourier(true, i, s.period, s.clock));
			out.push_back(fourier(false, i, s.period, s.clock));
		}
	}
	return out;
}

namespace {

void validate_recipe(const TimeFrame &frame, int horizon, const Recipe &recipe) {
	if (horizon < 1) {
		throw ConfigError(kModule, "horizon must be at least 1");
	}
	if (recipe.response.empty() || !frame.has(recipe.response)) {
		throw ConfigError(kModule, "response column '" + recipe.response + "' not in frame");
	}
	if (recipe.bs_count < 4 || recipe.ns_count < 1) {
		throw ConfigError(kModule, "bs_count must be >= 4 and ns_count >= 1");
	}
	std::set<std::string> used(recipe.columns.begin(), recipe.columns.end());
	for (const auto &f : recipe.pool) {
		collect_columns(f, used);
	}
	std::vector<std::string> unknown, unavailable;
	for (const auto &c : used) {
		if (c == recipe.response) {
			throw ConfigError(kModule, "response '" + c + "' cannot be a source column");
		}
		if (!frame.has(c)) {
			unknown.push_back(c);
		} else if (!timeseries::available_for_horizon(frame.column(c).tag, horizon)) {
			unavailable.push_back(c + " (" + std::string(timeseries::to_string(frame.column(c).tag)) + ")");
		}
	}
	if (!unknown.empty()) {
		throw ConfigError(kModule, "unknown recipe columns: " + join(unknown));
	}
	if (!unavailable.empty()) {
		throw ConfigError(kModule, "columns not available for horizon " + std::to_string(horizon) + ": " +
		                               join(unavailable));
	}
	if ((recipe.variant == Variant::M2 || recipe.variant == Variant::M3) && recipe.pool.empty()) {
		throw ConfigError(kModule, "M2/M3 recipes need a non-empty interaction pool");
	}
}

/// Accumulates non-constant, uniquely named columns.
class ColumnSink {
public:
	void add(Feature feature, std::vector<double> values) {
		auto id = feature.id();
		if (!ids_.insert(id).second) {
			return;
		}
		if (values.empty() || is_constant(values)) {
			log::info(kModule, "dropping constant column " + id);
			return;
		}
		features_.push_back(std::move(feature));
		columns_.push_back(std::move(values));
	}

	/// Adds basis functions of `values` under the given knots.
	template <typename Basis>
	void add_splines(const Feature &operand, const std::vector<double> &values, const KnotVector &knots, bool natural) {
		const Basis basis(knots);
		std::vector<std::vector<double>> block(basis.size(), std::vector<double>(values.size()));
		std::vector<double> buf(basis.size());
		for (std::size_t r = 0; r < values.size(); ++r) {
			basis.evaluate(values[r], buf);
			for (std::size_t k = 0; k < buf.size(); ++k) {
				block[k][r] = buf[k];
			}
		}
		for (std::size_t k = 0; k < block.size(); ++k) {
			auto f = natural ? nspline(operand, knots, static_cast<int>(k)) : bspline(operand, knots, static_cast<int>(k));
			add(std::move(f), std::move(block[k]));
		}
	}

	FeatureMatrix finish(std::vector<std::size_t> origins) {
		Eigen::MatrixXd data(static_cast<Eigen::Index>(origins.size()), static_cast<Eigen::Index>(columns_.size()));
		for (std::size_t c = 0; c < columns_.size(); ++c) {
			std::copy(columns_[c].begin(), columns_[c].end(), data.col(static_cast<Eigen::Index>(c)).data());
			std::vector<double>().swap(columns_[c]);
		}
		return {std::move(data), std::move(features_), std::move(origins)};
	}

private:
	std::set<std::string> ids_;
	std::vector<Feature> features_;
	std::vector<std::vector<double>> columns_;
};

void add_bs(ColumnSink &sink, const Feature &operand, const std::vector<double> &values, int count) {
	if (is_constant(values)) {
		return;
	}
	sink.add_splines<BSplineBasis>(operand, values, quantile_knots(values, count - 4), false);
}

} // namespace

Design build_design(const TimeFrame &frame, int horizon, const Recipe &recipe) {
	validate_recipe(frame, horizon, recipe);
	const auto h = static_cast<std::size_t>(horizon);
	const std::vector<Feature> base = base_features(recipe);
	std::vector<Feature> pool(recipe.pool.begin(),
	                          recipe.pool.begin() + static_cast<long>(std::min(recipe.pool.size(), recipe.interaction_pool)));

	// Complete origins: every base/pool input and the target are present.
	std::vector<std::size_t> all;
	for (std::size_t t = 0; t + h < frame.rows(); ++t) {
		all.push_back(t);
	}
	std::vector<std::size_t> complete;
	{
		Evaluator probe(frame, recipe.response, horizon, all);
		std::vector<std::vector<double>> inputs;
		for (const auto &f : base) {
			inputs.push_back(probe.evaluate(f));
		}
		for (const auto &f : pool) {
			inputs.push_back(probe.evaluate(f));
		}
		const auto y = frame.values(recipe.response);
		for (std::size_t r = 0; r < all.size(); ++r) {
			bool ok = !is_missing(y[all[r] + h]);
			for (std::size_t c = 0; ok && c < inputs.size(); ++c) {
				ok = !is_missing(inputs[c][r]);
			}
			if (ok) {
				complete.push_back(all[r]);
			}
		}
	}
	if (complete.size() < 2) {
		throw DataError(kModule, "fewer than two complete rows for horizon " + std::to_string(horizon));
	}

	Evaluator ev(frame, recipe.response, horizon, complete);
	ColumnSink sink;
	std::vector<Feature> taus;
	for (int i = 0; i < static_cast<int>(kTauWidth); ++i) {
		taus.push_back(tau(i));
	}

	switch (recipe.variant) {
	case Variant::M0:
	case Variant::M1: {
		for (const auto &f : base) {
			sink.add(f, ev.cached(f));
		}
		if (recipe.variant == Variant::M1) {
			for (const auto &f : base) {
				const auto &v = ev.cached(f);
				if (is_constant(v)) {
					continue;
				}
				// Sequential sums: vectorised reductions over std::vector
				// storage depend on its alignment and would break
				// run-to-run reproducibility.
				const auto n = static_cast<double>(v.size());
				const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
				double ss = 0.0;
				for (double x : v) {
					ss += (x - mean) * (x - mean);
				}
				const double sd = std::sqrt(ss / n);
				if (sd > 0.0) {
					auto e = exp_standardized(f, mean, sd);
					sink.add(e, ev.evaluate(e));
				}
			}
		}
		for (const auto &f : fourier_features()) {
			sink.add(f, ev.evaluate(f));
		}
		if (recipe.variant == Variant::M1) {
			for (const auto &f : taus) {
				sink.add(f, ev.evaluate(f));
			}
			for (const auto &f : base) {
				add_bs(sink, f, ev.cached(f), recipe.bs_count);
			}
			for (const auto &f : base) {
				const auto &v = ev.cached(f);
				if (!is_constant(v)) {
					sink.add_splines<NaturalSplineBasis>(f, v, quantile_knots(v, recipe.ns_count - 1), true);
				}
			}
		}
		break;
	}
	case Variant::M2:
	case Variant::M3: {
		const bool splines = recipe.variant == Variant::M3;
		auto emit = [&](const Feature &f, std::vector<double> values) {
			if (splines) {
				add_bs(sink, f, values, recipe.bs_count);
			} else {
				sink.add(f, std::move(values));
			}
		};
		for (const auto &f : pool) {
			emit(f, ev.cached(f));
		}
		for (const auto &f : taus) {
			emit(f, ev.cached(f));
		}
		for (std::size_t i = 0; i < pool.size(); ++i) {
			for (std::size_t j = i + 1; j < pool.size(); ++j) {
				auto p = product(pool[i], pool[j]);
				auto v = ev.evaluate(p);
				emit(p, std::move(v));
			}
		}
		for (const auto &f : pool) {
			for (const auto &t : taus) {
				auto p = product(f, t);
				auto v = ev.evaluate(p);
				emit(p, std::move(v));
			}
		}
		break;
	}
	}

	const auto yall = frame.values(recipe.response);
	Eigen::VectorXd y(static_cast<Eigen::Index>(complete.size()));
	for (std::size_t r = 0; r < complete.size(); ++r) {
		y(static_cast<Eigen::Index>(r)) = yall[complete[r] + h];
	}
	return {sink.finish(std::move(complete)), std::move(y)};
}

Eigen::VectorXd design_row(const TimeFrame &frame, std::string_view response, int horizon, std::size_t origin,
                           std::span<const Feature> features) {
	if (origin >= frame.rows()) {
		throw DataError(kModule, "forecast origin beyond the end of the frame");
	}
	Evaluator ev(frame, std::string(response), horizon, {origin});
	Eigen::VectorXd row(static_cast<Eigen::Index>(features.size()));
	for (std::size_t c = 0; c < features.size(); ++c) {
		const double v = ev.evaluate(features[c])[0];
		if (is_missing(v)) {
			std::set<std::string> cols;
			collect_columns(features[c], cols);
			if (features[c].kind == FeatureKind::response_lag) {
				cols.insert(features[c].column);
			}
			throw DataError(kModule, "missing input for feature " + features[c].id() + " (columns: " +
			                             join({cols.begin(), cols.end()}) + ") at origin " +
			                             timeseries::format_timestamp(frame.stamp(origin)) + ", horizon " +
			                             std::to_string(horizon));
		}
		row(static_cast<Eigen::Index>(c)) = v;
	}
	return row;
}

std::string to_csv(const FeatureMatrix &X, const TimeFrame &frame) {
	std::ostringstream out;
	const auto names = X.names();
	for (std::size_t c = 0; c < names.size(); ++c) {
		out << "# " << names[c] << ": " << to_json(X.provenance()[c]).dump() << '\n';
	}
	out << "origin";
	for (const auto &n : names) {
		out << ',' << n;
	}
	out << '\n';
	for (Eigen::Index r = 0; r < X.rows(); ++r) {
		out << timeseries::format_timestamp(frame.stamp(X.origins()[static_cast<std::size_t>(r)]));
		for (Eigen::Index c = 0; c < X.cols(); ++c) {
			out << ',' << io::format_double(X.data()(r, c));
		}
		out << '\n';
	}
	return out.str();
}

} // namespace gridcast::basis
