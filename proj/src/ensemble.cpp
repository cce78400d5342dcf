#include "gridcast/ensemble.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"
#include "gridcast/log.hpp"

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

namespace gridcast::ensemble {

namespace {

constexpr const char *kModule = "ensemble";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxHorizon = 24;
constexpr int kCorrectedBase = 6;

using timeseries::TimeFrame;

Prediction missing_prediction() { return {kNaN, kNaN, kNaN, kNaN}; }

bool same_plan(const cv::CvPlan &a, const cv::CvPlan &b) {
	if (a.n_rows != b.n_rows || a.splits.size() != b.splits.size()) {
		return false;
	}
	for (std::size_t k = 0; k < a.splits.size(); ++k) {
		const auto &x = a.splits[k];
		const auto &y = b.splits[k];
		if (!(x.train == y.train && x.validation == y.validation && x.test == y.test)) {
			return false;
		}
	}
	return true;
}

Eigen::VectorXd segment(const Eigen::VectorXd &v, const cv::Range &r) {
	return v.segment(static_cast<Eigen::Index>(r.begin), static_cast<Eigen::Index>(r.size()));
}

cv::Evaluation summarize(std::vector<cv::SplitMetrics> splits) {
	cv::Evaluation ev;
	ev.splits = std::move(splits);
	double sv = 0.0, st = 0.0;
	std::size_t ok = 0, ok_test = 0;
	for (const auto &s : ev.splits) {
		if (!s.ok) {
			continue;
		}
		sv += s.validation_rmse;
		++ok;
		if (!std::isnan(s.test_rmse)) {
			st += s.test_rmse;
			++ok_test;
		}
	}
	ev.complete = ok == ev.splits.size();
	ev.mean_validation_rmse = ok > 0 ? sv / static_cast<double>(ok) : kNaN;
	ev.mean_test_rmse = ok_test > 0 ? st / static_cast<double>(ok_test) : kNaN;
	return ev;
}

std::string two_digits(int h) {
	char buf[8];
	std::snprintf(buf, sizeof buf, "%02d", h);
	return buf;
}

std::string ensemble_file(int h) { return "ensemble_h" + two_digits(h) + ".json"; }

double z_quantile(double level) {
	return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);
}

// Rethrows a missing-input error for one member at one origin with the
// forecast horizon that needed it.
[[noreturn]] void raise_missing(const WeightedEnsemble &ens, const TimeFrame &frame, std::size_t origin,
                                int target_horizon) {
	if (origin >= frame.rows()) {
		throw DataError(kModule, "forecast origin beyond the end of the frame (horizon " +
		                             std::to_string(target_horizon) + ")");
	}
	for (const auto &m : ens.members) {
		try {
			(void)basis::design_row(frame, m.response, m.horizon, origin, m.model.features);
		} catch (const DataError &e) {
			throw DataError(kModule, std::string(e.what()) + " (needed for forecast horizon " +
			                             std::to_string(target_horizon) + ")");
		}
	}
	throw DataError(kModule, "missing input at origin " + timeseries::format_timestamp(frame.stamp(origin)) +
	                             " for forecast horizon " + std::to_string(target_horizon));
}

// Last contiguous run of finite values ending at `end` (inclusive), at most `cap` long.
// Keeps the served rows of each 24-row path.
std::vector<std::vector<ForecastRow>> compact(std::vector<std::vector<ForecastRow>> paths,
                                              const std::array<bool, kMaxHorizon> &served) {
	for (auto &path : paths) {
		std::erase_if(path, [&](const ForecastRow &r) { return !served[static_cast<std::size_t>(r.horizon - 1)]; });
	}
	return paths;
}

std::vector<int> served_horizons(std::span<const int> horizons) {
	std::set<int> hs;
	for (int h : horizons) {
		if (h < 1 || h > kMaxHorizon) {
			throw ConfigError(kModule, "horizon " + std::to_string(h) + " outside 1..24");
		}
		hs.insert(h);
	}
	if (hs.empty()) {
		throw ConfigError(kModule, "the horizon set is empty");
	}
	return {hs.begin(), hs.end()};
}

std::vector<double> trailing_run(const std::vector<double> &v, std::size_t end, std::size_t cap) {
	std::size_t begin = end + 1;
	while (begin > 0 && !std::isnan(v[begin - 1]) && end + 1 - (begin - 1) <= cap) {
		--begin;
	}
	return {v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end + 1)};
}

arima::ArimaOrder corrector_order(const CorrectorOptions &options, ResponseKind kind) {
	const std::string spec = options.arima.empty() ? std::string(to_string(kind)) : options.arima;
	if (spec == "average" || spec == "marginal") {
		return arima::preset(spec);
	}
	return arima::parse_order(spec);
}

} // namespace

std::vector<double> softmax_weights(std::span<const double> rmse) {
	if (rmse.empty()) {
		throw ConfigError(kModule, "softmax weights need at least one RMSE");
	}
	for (double r : rmse) {
		if (!std::isfinite(r) || r < 0.0) {
			throw ConfigError(kModule, "RMSE values must be finite and non-negative");
		}
	}
	const double lo = *std::min_element(rmse.begin(), rmse.end());
	std::vector<double> w(rmse.size());
	double sum = 0.0;
	for (std::size_t i = 0; i < rmse.size(); ++i) {
		w[i] = std::exp(-(rmse[i] - lo));
		sum += w[i];
	}
	for (double &v : w) {
		v /= sum;
	}
	return w;
}

basis::Recipe make_recipe(basis::Variant variant, const TimeFrame &frame, std::string_view response, int horizon,
                          const PipelineOptions &options) {
	if (!frame.has(response)) {
		throw ConfigError(kModule, "response column '" + std::string(response) + "' is not in the data");
	}
	basis::Recipe r;
	r.variant = variant;
	r.response = std::string(response);
	if (options.columns.empty()) {
		r.columns = basis::available_columns(frame, response, horizon);
	} else {
		for (const auto &c : options.columns) {
			if (!frame.has(c)) {
				throw ConfigError(kModule, "column '" + c + "' is not in the data");
			}
			if (c == response) {
				throw ConfigError(kModule, "column '" + c + "' is the response");
			}
			if (timeseries::available_for_horizon(frame.column(c).tag, horizon)) {
				r.columns.push_back(c);
			}
		}
	}
	r.ma_windows = options.ma_windows;
	r.interaction_pool = options.interaction_pool;
	r.bs_count = options.bs_count;
	r.ns_count = options.ns_count;
	return r;
}

std::vector<basis::Feature> interaction_pool(const TimeFrame &frame, std::string_view response, int horizon,
                                             const PipelineOptions &options) {
	const basis::Recipe recipe = make_recipe(basis::Variant::M0, frame, response, horizon, options);
	const basis::Design d = basis::build_design(frame, horizon, recipe);
	const cv::CvPlan plan =
	    cv::default_plan(static_cast<std::size_t>(d.X.rows()), options.n_splits, options.validation_len, options.test_len);
	const featsel::SelectionReport report = featsel::select_features(d.X, d.y, plan, options.selection);
	std::vector<basis::Feature> pool;
	for (auto c : report.lasso_ranking) {
		if (pool.size() == options.interaction_pool) {
			break;
		}
		pool.push_back(d.X.provenance()[static_cast<std::size_t>(c)]);
	}
	log::info(kModule, "h" + std::to_string(horizon) + ": interaction pool of " + std::to_string(pool.size()) +
	                       " ranked M0 features");
	return pool;
}

Pipeline build_base_model(basis::Variant variant, const TimeFrame &frame, std::string_view response, int horizon,
                          const PipelineOptions &options, std::span<const basis::Feature> pool) {
	basis::Recipe recipe = make_recipe(variant, frame, response, horizon, options);
	if (variant == basis::Variant::M2 || variant == basis::Variant::M3) {
		if (pool.empty()) {
			throw ConfigError(kModule, std::string(basis::to_string(variant)) + " needs a non-empty interaction pool");
		}
		recipe.pool.assign(pool.begin(), pool.end());
	}
	basis::Design d = basis::build_design(frame, horizon, recipe);

	Pipeline p;
	p.variant = variant;
	p.horizon = horizon;
	p.response = std::string(response);
	p.plan = cv::default_plan(static_cast<std::size_t>(d.X.rows()), options.n_splits, options.validation_len,
	                          options.test_len);
	p.selection = featsel::select_features(d.X, d.y, p.plan, options.selection);

	std::vector<std::size_t> cols(p.selection.final_columns.begin(), p.selection.final_columns.end());
	const basis::FeatureMatrix Xs = d.X.select(cols);
	const Eigen::MatrixXd Z = linreg::with_intercept(Xs.data());

	std::vector<cv::SplitMetrics> metrics;
	for (const auto &split : p.plan.splits) {
		cv::SplitMetrics m;
		Eigen::VectorXd vp, tp;
		try {
			const auto ntr = static_cast<Eigen::Index>(split.train.end);
			const linreg::LinearModel fit = linreg::fit_ols(Z.topRows(ntr), d.y.head(ntr));
			auto rows = [&](const cv::Range &r) {
				return Eigen::MatrixXd(Z.middleRows(static_cast<Eigen::Index>(r.begin), static_cast<Eigen::Index>(r.size())));
			};
			vp = linreg::predict_rows(fit, rows(split.validation));
			m.validation_rmse = linreg::rmse(segment(d.y, split.validation), vp);
			if (split.test.size() > 0) {
				tp = linreg::predict_rows(fit, rows(split.test));
				m.test_rmse = linreg::rmse(segment(d.y, split.test), tp);
			} else {
				m.test_rmse = kNaN;
			}
			m.ok = true;
		} catch (const Error &e) {
			m.error = e.what();
			vp.resize(0);
			tp.resize(0);
		}
		metrics.push_back(std::move(m));
		p.validation_predictions.push_back(std::move(vp));
		p.test_predictions.push_back(std::move(tp));
	}
	p.evaluation = summarize(std::move(metrics));
	p.model = linreg::fit_ols(Z, d.y, Xs.provenance());
	p.origins = Xs.origins();
	p.target = std::move(d.y);
	log::info(kModule, "h" + std::to_string(horizon) + " " + std::string(basis::to_string(variant)) + ": " +
	                       std::to_string(cols.size()) + " of " + std::to_string(d.X.cols()) +
	                       " columns, validation RMSE " + io::format_significant(p.evaluation.mean_validation_rmse, 4));
	return p;
}

WeightedEnsemble build_weighted(std::vector<Pipeline> members) {
	if (members.empty()) {
		throw ConfigError(kModule, "an ensemble needs at least one member");
	}
	const Pipeline &first = members.front();
	for (const auto &m : members) {
		if (m.horizon != first.horizon || m.response != first.response) {
			throw ConfigError(kModule, "ensemble members disagree on horizon or response");
		}
		if (m.origins != first.origins || !same_plan(m.plan, first.plan) ||
		    m.validation_predictions.size() != first.plan.splits.size()) {
			throw ConfigError(kModule, "ensemble members were evaluated on different CV splits");
		}
	}
	WeightedEnsemble ens;
	ens.horizon = first.horizon;
	for (const auto &m : members) {
		ens.source_rmse.push_back(m.evaluation.mean_validation_rmse);
	}
	ens.weights = softmax_weights(ens.source_rmse);

	std::vector<cv::SplitMetrics> metrics;
	for (std::size_t k = 0; k < first.plan.splits.size(); ++k) {
		const auto &split = first.plan.splits[k];
		cv::SplitMetrics s;
		const bool all_ok = std::all_of(members.begin(), members.end(),
		                                [&](const Pipeline &m) { return m.evaluation.splits[k].ok; });
		if (!all_ok) {
			s.error = "a member failed this split";
			metrics.push_back(std::move(s));
			continue;
		}
		Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(split.validation.size()));
		Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(split.test.size()));
		for (std::size_t i = 0; i < members.size(); ++i) {
			v += ens.weights[i] * members[i].validation_predictions[k];
			if (t.size() > 0) {
				t += ens.weights[i] * members[i].test_predictions[k];
			}
		}
		s.ok = true;
		s.validation_rmse = linreg::rmse(segment(first.target, split.validation), v);
		s.test_rmse = t.size() > 0 ? linreg::rmse(segment(first.target, split.test), t) : kNaN;
		metrics.push_back(std::move(s));
	}
	ens.evaluation = summarize(std::move(metrics));
	ens.members = std::move(members);
	return ens;
}

std::vector<Prediction> predict(const Pipeline &member, const TimeFrame &frame, std::span<const std::size_t> origins,
                                double level) {
	const auto &features = member.model.features;
	if (static_cast<Eigen::Index>(features.size()) + 1 != member.model.beta.size()) {
		throw ConfigError(kModule, "model has no feature provenance; cannot recompute its design");
	}
	std::vector<std::size_t> inside;
	for (auto o : origins) {
		inside.push_back(std::min(o, frame.rows() - 1));
	}
	basis::Evaluator ev(frame, member.response, member.horizon, inside);
	Eigen::MatrixXd Z(static_cast<Eigen::Index>(origins.size()), static_cast<Eigen::Index>(features.size()) + 1);
	Z.col(0).setOnes();
	for (std::size_t c = 0; c < features.size(); ++c) {
		const auto v = ev.evaluate(features[c]);
		for (std::size_t r = 0; r < v.size(); ++r) {
			Z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c) + 1) = v[r];
		}
	}
	std::vector<Prediction> out(origins.size(), missing_prediction());
	for (std::size_t r = 0; r < origins.size(); ++r) {
		const auto rr = static_cast<Eigen::Index>(r);
		if (origins[r] >= frame.rows() || Z.row(rr).hasNaN()) {
			continue;
		}
		const Eigen::VectorXd z = Z.row(rr).transpose();
		const auto iv = linreg::prediction_interval(member.model, z, level);
		out[r] = {linreg::predict(member.model, z), iv.lo, iv.hi, linreg::mean_variance(member.model, z)};
	}
	return out;
}

std::vector<Prediction> predict(const WeightedEnsemble &ensemble, const TimeFrame &frame,
                                std::span<const std::size_t> origins, double level) {
	std::vector<Prediction> out(origins.size(), Prediction{});
	std::vector<double> sd(origins.size(), 0.0);
	for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
		const double w = ensemble.weights[i];
		const auto p = predict(ensemble.members[i], frame, origins, level);
		for (std::size_t r = 0; r < origins.size(); ++r) {
			out[r].point += w * p[r].point;
			out[r].lo += w * p[r].lo;
			out[r].hi += w * p[r].hi;
			sd[r] += w * std::sqrt(p[r].mean_variance);
		}
	}
	for (std::size_t r = 0; r < origins.size(); ++r) {
		out[r].mean_variance = sd[r] * sd[r];
	}
	return out;
}

std::string_view to_string(ResponseKind kind) { return kind == ResponseKind::average ? "average" : "marginal"; }

ResponseKind parse_kind(std::string_view text) {
	if (text == "average") {
		return ResponseKind::average;
	}
	if (text == "marginal") {
		return ResponseKind::marginal;
	}
	throw ConfigError(kModule, "response kind must be 'average' or 'marginal', got '" + std::string(text) + "'");
}

Route HorizonPlan::at(int horizon) const {
	if (horizon < 1 || horizon > kMaxHorizon) {
		throw ConfigError(kModule, "horizon " + std::to_string(horizon) + " outside 1..24");
	}
	return routes[static_cast<std::size_t>(horizon - 1)];
}

bool HorizonPlan::any_corrected() const {
	return std::find(routes.begin(), routes.end(), Route::corrected) != routes.end();
}

std::vector<int> HorizonPlan::ensemble_horizons() const {
	std::set<int> hs;
	for (int h = 1; h <= kMaxHorizon; ++h) {
		if (at(h) == Route::ensemble) {
			hs.insert(h);
		}
	}
	if (any_corrected()) {
		hs.insert(kCorrectedBase);
	}
	return {hs.begin(), hs.end()};
}

std::vector<int> all_horizons() {
	std::vector<int> hs(kMaxHorizon);
	std::iota(hs.begin(), hs.end(), 1);
	return hs;
}

std::vector<int> CompoundForecaster::required_ensembles() const {
	std::set<int> hs;
	for (int h : horizons) {
		hs.insert(plan.at(h) == Route::ensemble ? h : kCorrectedBase);
	}
	return {hs.begin(), hs.end()};
}

bool CompoundForecaster::needs_corrector() const {
	return std::any_of(horizons.begin(), horizons.end(), [&](int h) { return plan.at(h) == Route::corrected; });
}

HorizonPlan horizon_plan(std::span<const int> corrected) {
	HorizonPlan plan;
	plan.routes.fill(Route::ensemble);
	for (int h : corrected) {
		if (h < 1 || h > kCorrectedBase) {
			throw ConfigError(kModule, "corrected horizons must lie in 1..6, got " + std::to_string(h));
		}
		plan.routes[static_cast<std::size_t>(h - 1)] = Route::corrected;
	}
	return plan;
}

HorizonPlan default_horizon_plan(ResponseKind kind) {
	if (kind == ResponseKind::average) {
		const int hs[] = {3, 4, 5, 6};
		return horizon_plan(hs);
	}
	const int hs[] = {1, 2, 3, 4, 5, 6};
	return horizon_plan(hs);
}

std::vector<double> residual_series(const WeightedEnsemble &h6, const TimeFrame &frame, std::string_view response) {
	const auto y = frame.values(response);
	const auto h = static_cast<std::size_t>(h6.horizon);
	std::vector<double> r(frame.rows(), kNaN);
	if (frame.rows() <= h) {
		return r;
	}
	std::vector<std::size_t> origins(frame.rows() - h);
	for (std::size_t s = 0; s < origins.size(); ++s) {
		origins[s] = s;
	}
	const auto pred = predict(h6, frame, origins);
	for (std::size_t s = 0; s < origins.size(); ++s) {
		r[s + h] = y[s + h] - pred[s].point; // NaN propagates
	}
	return r;
}

Corrector fit_corrector(const WeightedEnsemble &h6, const TimeFrame &frame, std::string_view response,
                        ResponseKind kind, const CorrectorOptions &options) {
	const auto r = residual_series(h6, frame, response);
	std::size_t last = r.size();
	while (last > 0 && std::isnan(r[last - 1])) {
		--last;
	}
	if (last == 0) {
		throw DataError(kModule, "no in-sample residuals to fit the corrector");
	}
	const auto run = trailing_run(r, last - 1, r.size());

	Corrector c;
	c.history_window = options.history_window;
	const double rms = std::sqrt(std::inner_product(run.begin(), run.end(), run.begin(), 0.0) /
	                             static_cast<double>(run.size()));
	const auto y = frame.values(response);
	double yrms = 0.0;
	std::size_t ny = 0;
	for (double v : y) {
		if (!std::isnan(v)) {
			yrms += v * v;
			++ny;
		}
	}
	yrms = ny > 0 ? std::sqrt(yrms / static_cast<double>(ny)) : 0.0;
	if (rms <= 1e-10 * std::max(1.0, yrms)) {
		// Exact base fit: a zero corrector, so intervals stay degenerate.
		c.model.order = options.arima == "auto" ? arima::ArimaOrder{} : corrector_order(options, kind);
		c.model.ar.assign(static_cast<std::size_t>(c.model.order.p), 0.0);
		c.model.ma.assign(static_cast<std::size_t>(c.model.order.q), 0.0);
		c.model.sar.assign(static_cast<std::size_t>(c.model.order.P), 0.0);
		c.model.sma.assign(static_cast<std::size_t>(c.model.order.Q), 0.0);
		c.model.n_effective = run.size();
		c.model.state = arima::filter(c.model, run);
		log::info(kModule, "h6 residuals are zero; corrector is the zero model");
		return c;
	}
	if (options.arima == "auto") {
		const auto candidates = arima::default_candidates();
		c.model = arima::auto_fit(run, candidates, options.fit);
	} else {
		c.model = arima::fit_arima(run, corrector_order(options, kind), options.fit);
	}
	log::info(kModule, "corrector " + arima::to_string(c.model.order) + " on " + std::to_string(run.size()) +
	                       " residuals, sigma2 " + io::format_significant(c.model.innovation_variance, 4));
	return c;
}

WeightedEnsemble build_horizon(const TimeFrame &frame, std::string_view response, int horizon,
                               const CompoundOptions &options) {
	const bool needs_pool = std::any_of(options.members.begin(), options.members.end(), [](basis::Variant v) {
		return v == basis::Variant::M2 || v == basis::Variant::M3;
	});
	std::vector<basis::Feature> pool;
	if (needs_pool) {
		pool = interaction_pool(frame, response, horizon, options.pipeline);
	}
	std::vector<Pipeline> members;
	for (auto v : options.members) {
		members.push_back(build_base_model(v, frame, response, horizon, options.pipeline, pool));
	}
	return build_weighted(std::move(members));
}

CompoundForecaster build_compound(const TimeFrame &frame, std::string_view response, ResponseKind kind,
                                  const CompoundOptions &options) {
	CompoundForecaster f;
	f.response = std::string(response);
	f.kind = kind;
	f.plan = options.corrected_horizons ? horizon_plan(*options.corrected_horizons) : default_horizon_plan(kind);
	if (!options.horizons.empty()) {
		f.horizons = served_horizons(options.horizons);
	}

	EnsembleFactory make_ensemble = options.ensemble_factory;
	if (!make_ensemble) {
		make_ensemble = [&](int h) { return build_horizon(frame, response, h, options); };
	}
	CorrectorFactory make_corrector = options.corrector_factory;
	if (!make_corrector) {
		make_corrector = [&](const WeightedEnsemble &h6) {
			return fit_corrector(h6, frame, response, kind, options.corrector);
		};
	}
	for (int h : f.required_ensembles()) {
		log::info(kModule, "fitting horizon " + std::to_string(h));
		WeightedEnsemble e = make_ensemble(h);
		if (e.horizon != h) {
			throw ConfigError(kModule, "ensemble factory returned horizon " + std::to_string(e.horizon) +
			                               " for horizon " + std::to_string(h));
		}
		f.ensembles.emplace(h, std::move(e));
	}
	if (f.needs_corrector()) {
		f.corrector = make_corrector(f.ensembles.at(kCorrectedBase));
	}
	return f;
}

std::vector<std::vector<ForecastRow>> forecast_paths(const CompoundForecaster &forecaster, const TimeFrame &frame,
                                                     std::span<const std::size_t> origins) {
	constexpr double kLevel = 0.95;
	const auto y = frame.values(forecaster.response);
	for (auto t : origins) {
		if (t >= frame.rows()) {
			throw DataError(kModule, "forecast origin beyond the end of the frame");
		}
	}
	std::vector<std::vector<ForecastRow>> out(origins.size());
	for (std::size_t i = 0; i < origins.size(); ++i) {
		out[i].resize(kMaxHorizon);
		for (int h = 1; h <= kMaxHorizon; ++h) {
			auto &row = out[i][static_cast<std::size_t>(h - 1)];
			row.horizon = h;
			row.target = frame.stamp(origins[i]) + h;
			row.route = forecaster.plan.at(h);
		}
	}

	std::array<bool, kMaxHorizon> served{};
	for (int h : forecaster.horizons) {
		served.at(static_cast<std::size_t>(h - 1)) = true;
	}
	for (int h : forecaster.horizons) {
		if (forecaster.plan.at(h) != Route::ensemble) {
			continue;
		}
		const auto found = forecaster.ensembles.find(h);
		if (found == forecaster.ensembles.end()) {
			throw ConfigError(kModule, "no ensemble for horizon " + std::to_string(h));
		}
		const WeightedEnsemble &ens = found->second;
		const auto pred = predict(ens, frame, origins, kLevel);
		for (std::size_t i = 0; i < origins.size(); ++i) {
			if (std::isnan(pred[i].point)) {
				raise_missing(ens, frame, origins[i], h);
			}
			auto &row = out[i][static_cast<std::size_t>(h - 1)];
			row.point = pred[i].point;
			row.lo = pred[i].lo;
			row.hi = pred[i].hi;
		}
	}

	if (!forecaster.needs_corrector()) {
		return compact(std::move(out), served);
	}
	if (!forecaster.corrector) {
		throw ConfigError(kModule, "plan corrects horizons but the forecaster has no corrector");
	}
	const auto it = forecaster.ensembles.find(kCorrectedBase);
	if (it == forecaster.ensembles.end()) {
		throw ConfigError(kModule, "plan corrects horizons but the h6 ensemble is missing");
	}
	const WeightedEnsemble &h6 = it->second;
	const Corrector &corr = *forecaster.corrector;
	const std::size_t window = std::max<std::size_t>(corr.history_window, 1);
	const auto k6 = static_cast<std::size_t>(kCorrectedBase);

	// h6 predictions for every origin s in [lo, max t], shared by all paths.
	const std::size_t t_max = *std::max_element(origins.begin(), origins.end());
	const std::size_t t_min = *std::min_element(origins.begin(), origins.end());
	const std::size_t lo = t_min > window + k6 ? t_min - window - k6 : 0;
	std::vector<std::size_t> s_all(t_max - lo + 1);
	for (std::size_t s = 0; s < s_all.size(); ++s) {
		s_all[s] = lo + s;
	}
	const auto base = predict(h6, frame, s_all, kLevel);
	// Residual at target u uses the prediction from origin u - 6.
	std::vector<double> resid(t_max + 1, kNaN);
	for (std::size_t u = lo + k6; u <= t_max; ++u) {
		resid[u] = y[u] - base[u - k6 - lo].point;
	}
	const double z = z_quantile(kLevel);

	for (std::size_t i = 0; i < origins.size(); ++i) {
		const std::size_t t = origins[i];
		if (std::isnan(resid[t])) {
			throw DataError(kModule, "no h6 residual at origin " + timeseries::format_timestamp(frame.stamp(t)) +
			                             "; the response or an h6 input is missing there (needed for corrected horizons)");
		}
		const auto history = trailing_run(resid, t, window);
		const arima::State state = arima::filter(corr.model, history);
		const arima::Forecast fc = arima::forecast(corr.model, state, k6);
		for (int h = 1; h <= kCorrectedBase; ++h) {
			if (forecaster.plan.at(h) != Route::corrected || !served[static_cast<std::size_t>(h - 1)]) {
				continue;
			}
			const std::size_t s = t + static_cast<std::size_t>(h) - k6;
			if (s < lo) {
				raise_missing(h6, frame, s, h);
			}
			const Prediction &b = base[s - lo];
			if (std::isnan(b.point)) {
				raise_missing(h6, frame, s, h);
			}
			const auto hh = static_cast<std::size_t>(h - 1);
			const double sd = std::sqrt(b.mean_variance + fc.variance[hh]);
			auto &row = out[i][hh];
			row.point = b.point + fc.mean[hh];
			row.lo = row.point - z * sd;
			row.hi = row.point + z * sd;
		}
	}
	return compact(std::move(out), served);
}

std::vector<ForecastRow> forecast_24h(const CompoundForecaster &forecaster, const TimeFrame &frame,
                                      std::size_t origin) {
	const std::size_t o[] = {origin};
	return std::move(forecast_paths(forecaster, frame, o).front());
}

std::vector<HorizonScore> backtest(const CompoundForecaster &forecaster, const TimeFrame &frame,
                                   std::span<const std::size_t> origins) {
	const auto paths = forecast_paths(forecaster, frame, origins);
	const auto y = frame.values(forecaster.response);
	std::vector<HorizonScore> out;
	for (std::size_t k = 0; k < forecaster.horizons.size(); ++k) {
		HorizonScore s;
		s.horizon = forecaster.horizons[k];
		s.route = forecaster.plan.at(s.horizon);
		double sse = 0.0;
		std::size_t inside = 0;
		for (std::size_t i = 0; i < origins.size(); ++i) {
			const std::size_t u = origins[i] + static_cast<std::size_t>(s.horizon);
			if (u >= frame.rows() || std::isnan(y[u])) {
				continue;
			}
			const auto &r = paths[i][k];
			const double e = y[u] - r.point;
			sse += e * e;
			inside += r.lo <= y[u] && y[u] <= r.hi ? 1 : 0;
			++s.n;
		}
		const auto n = static_cast<double>(s.n);
		s.rmse = s.n > 0 ? std::sqrt(sse / n) : kNaN;
		s.coverage = s.n > 0 ? static_cast<double>(inside) / n : kNaN;
		out.push_back(s);
	}
	return out;
}

nlohmann::json to_json(std::span<const HorizonScore> scores) {
	auto out = nlohmann::json::array();
	for (const auto &s : scores) {
		out.push_back({{"horizon", s.horizon},
		               {"route", s.route == Route::ensemble ? "ensemble" : "corrected"},
		               {"n", s.n},
		               {"rmse", s.rmse},
		               {"coverage", s.coverage}});
	}
	return out;
}

std::string forecast_csv(std::span<const ForecastRow> rows) {
	std::string out = "timestamp,horizon,point,lo95,hi95\n";
	for (const auto &r : rows) {
		out += timeseries::format_timestamp(r.target) + "," + std::to_string(r.horizon) + "," +
		       io::format_double(r.point) + "," + io::format_double(r.lo) + "," + io::format_double(r.hi) + "\n";
	}
	return out;
}

nlohmann::json to_json(const Pipeline &p) {
	return {{"variant", basis::to_string(p.variant)},
	        {"horizon", p.horizon},
	        {"response", p.response},
	        {"model", linreg::to_json(p.model)},
	        {"evaluation", cv::to_json(p.evaluation)}};
}

Pipeline pipeline_from_json(const nlohmann::json &j) {
	try {
		Pipeline p;
		p.variant = basis::parse_variant(j.at("variant").get<std::string>());
		p.horizon = j.at("horizon").get<int>();
		p.response = j.at("response").get<std::string>();
		p.model = linreg::model_from_json(j.at("model"));
		p.evaluation = cv::evaluation_from_json(j.at("evaluation"));
		return p;
	} catch (const nlohmann::json::exception &e) {
		throw DataError(kModule, std::string("malformed pipeline JSON: ") + e.what());
	}
}

nlohmann::json to_json(const WeightedEnsemble &e) {
	auto members = nlohmann::json::array();
	for (const auto &m : e.members) {
		members.push_back(to_json(m));
	}
	return {{"horizon", e.horizon},
	        {"weights", e.weights},
	        {"source_rmse", e.source_rmse},
	        {"evaluation", cv::to_json(e.evaluation)},
	        {"members", std::move(members)}};
}

WeightedEnsemble ensemble_from_json(const nlohmann::json &j) {
	try {
		WeightedEnsemble e;
		e.horizon = j.at("horizon").get<int>();
		e.weights = j.at("weights").get<std::vector<double>>();
		e.source_rmse = j.at("source_rmse").get<std::vector<double>>();
		e.evaluation = cv::evaluation_from_json(j.at("evaluation"));
		for (const auto &m : j.at("members")) {
			e.members.push_back(pipeline_from_json(m));
		}
		if (e.members.empty() || e.members.size() != e.weights.size()) {
			throw DataError(kModule, "ensemble JSON has mismatched members and weights");
		}
		return e;
	} catch (const nlohmann::json::exception &ex) {
		throw DataError(kModule, std::string("malformed ensemble JSON: ") + ex.what());
	}
}

nlohmann::json evaluation_json(const CompoundForecaster &f) {
	auto horizons = nlohmann::json::array();
	for (const auto &[h, e] : f.ensembles) {
		auto members = nlohmann::json::array();
		for (std::size_t i = 0; i < e.members.size(); ++i) {
			const auto &m = e.members[i];
			members.push_back({{"model", basis::to_string(m.variant)},
			                   {"validation_rmse", m.evaluation.mean_validation_rmse},
			                   {"test_rmse", m.evaluation.mean_test_rmse},
			                   {"weight", e.weights[i]},
			                   {"n_features", m.model.features.size()}});
		}
		std::vector<int> serves;
		for (int g : f.horizons) {
			const bool mine = f.plan.at(g) == Route::ensemble ? g == h : h == kCorrectedBase;
			if (mine) {
				serves.push_back(g);
			}
		}
		horizons.push_back({{"horizon", h},
		                    {"serves", serves},
		                    {"ensemble",
		                     {{"validation_rmse", e.evaluation.mean_validation_rmse},
		                      {"test_rmse", e.evaluation.mean_test_rmse}}},
		                    {"members", std::move(members)}});
	}
	nlohmann::json j{{"response", f.response}, {"kind", to_string(f.kind)}, {"horizons", std::move(horizons)}};
	if (f.corrector) {
		std::vector<int> corrected;
		for (int g : f.horizons) {
			if (f.plan.at(g) == Route::corrected) {
				corrected.push_back(g);
			}
		}
		j["corrector"] = {{"order", arima::to_string(f.corrector->model.order)},
		                  {"aic", f.corrector->model.aic},
		                  {"innovation_variance", f.corrector->model.innovation_variance},
		                  {"horizons", corrected}};
	}
	return j;
}

void save(const CompoundForecaster &f, const std::filesystem::path &dir) {
	std::error_code ec;
	std::filesystem::create_directories(dir / "selection", ec);
	if (ec) {
		throw ConfigError(kModule, "cannot create " + dir.string() + ": " + ec.message());
	}
	auto plan = nlohmann::json::array();
	for (int h = 1; h <= kMaxHorizon; ++h) {
		plan.push_back({{"horizon", h}, {"route", f.plan.at(h) == Route::ensemble ? "ensemble" : "corrected"}});
	}
	std::vector<std::string> files;
	for (const auto &[h, e] : f.ensembles) {
		files.push_back(ensemble_file(h));
		io::write_file_atomic(dir / files.back(), to_json(e).dump(1) + "\n");
		for (const auto &m : e.members) {
			const auto name = "h" + two_digits(h) + "_" + std::string(basis::to_string(m.variant)) + ".json";
			io::write_file_atomic(dir / "selection" / name, featsel::to_json(m.selection).dump(1) + "\n");
		}
	}
	if (f.corrector) {
		files.push_back("corrector.json");
		const nlohmann::json c{{"arima", arima::to_json(f.corrector->model)},
		                       {"history_window", f.corrector->history_window}};
		io::write_file_atomic(dir / files.back(), c.dump(1) + "\n");
	}
	const nlohmann::json manifest{{"format", "gridcast-compound-1"},
	                              {"response", f.response},
	                              {"kind", to_string(f.kind)},
	                              {"plan", std::move(plan)},
	                              {"horizons", f.horizons},
	                              {"files", files}};
	io::write_file_atomic(dir / "manifest.json", manifest.dump(1) + "\n");
}

CompoundForecaster load(const std::filesystem::path &dir) {
	const auto manifest_path = dir / "manifest.json";
	if (!std::filesystem::exists(manifest_path)) {
		throw DataError(kModule, "model directory " + dir.string() + " is incomplete; missing: manifest.json");
	}
	CompoundForecaster f;
	nlohmann::json manifest;
	try {
		manifest = nlohmann::json::parse(io::read_file(manifest_path));
		f.response = manifest.at("response").get<std::string>();
		f.kind = parse_kind(manifest.at("kind").get<std::string>());
		std::vector<int> corrected;
		for (const auto &e : manifest.at("plan")) {
			if (e.at("route").get<std::string>() == "corrected") {
				corrected.push_back(e.at("horizon").get<int>());
			}
		}
		f.plan = horizon_plan(corrected);
		if (manifest.contains("horizons")) {
			f.horizons = served_horizons(manifest.at("horizons").get<std::vector<int>>());
		}
	} catch (const nlohmann::json::exception &e) {
		throw DataError(kModule, "malformed " + manifest_path.string() + ": " + e.what());
	}

	std::vector<std::string> expected;
	for (int h : f.required_ensembles()) {
		expected.push_back(ensemble_file(h));
	}
	if (f.needs_corrector()) {
		expected.push_back("corrector.json");
	}
	std::vector<std::string> missing;
	for (const auto &name : expected) {
		if (!std::filesystem::exists(dir / name)) {
			missing.push_back(name);
		}
	}
	if (!missing.empty()) {
		std::string list;
		for (const auto &m : missing) {
			list += (list.empty() ? "" : ", ") + m;
		}
		throw DataError(kModule, "model directory " + dir.string() + " is incomplete; missing: " + list);
	}

	for (int h : f.required_ensembles()) {
		const auto path = dir / ensemble_file(h);
		try {
			f.ensembles.emplace(h, ensemble_from_json(nlohmann::json::parse(io::read_file(path))));
		} catch (const nlohmann::json::exception &e) {
			throw DataError(kModule, "malformed " + path.string() + ": " + e.what());
		}
		if (f.ensembles.at(h).horizon != h) {
			throw DataError(kModule, path.string() + " holds the wrong horizon");
		}
	}
	if (f.needs_corrector()) {
		const auto path = dir / "corrector.json";
		try {
			const auto j = nlohmann::json::parse(io::read_file(path));
			Corrector c;
			c.model = arima::model_from_json(j.at("arima"));
			c.history_window = j.at("history_window").get<std::size_t>();
			f.corrector = std::move(c);
		} catch (const nlohmann::json::exception &e) {
			throw DataError(kModule, "malformed " + path.string() + ": " + e.what());
		}
	}
	return f;
}

} // namespace gridcast::ensemble
