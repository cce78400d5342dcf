#pragma once

#include "gridcast/arima.hpp"
#include "gridcast/cv.hpp"
#include "gridcast/design.hpp"
#include "gridcast/featsel.hpp"
#include "gridcast/linreg.hpp"
#include "gridcast/timeseries.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridcast::ensemble {

/// w_i = exp(-rmse_i) / sum_j exp(-rmse_j), shifted by the minimum RMSE for
/// range safety. Lower RMSE gets the larger weight. Throws ConfigError on
/// empty input or non-finite / negative values.
[[nodiscard]] std::vector<double> softmax_weights(std::span<const double> rmse);

struct PipelineOptions {
	std::size_t n_splits = cv::kDefaultSplits;
	std::size_t validation_len = cv::kDefaultWindow;
	std::size_t test_len = cv::kDefaultWindow;
	/// Source columns; empty means every non-response column of the frame.
	/// Columns unavailable for a horizon are dropped per horizon.
	std::vector<std::string> columns;
	std::vector<std::size_t> ma_windows{24, 48};
	std::size_t interaction_pool = 50;
	int bs_count = 4;
	int ns_count = 4;
	featsel::SelectOptions selection;
};

/// Fitted base model for one horizon. Split predictions are kept in memory
/// for ensembling and are not serialized.
struct Pipeline {
	basis::Variant variant = basis::Variant::M1;
	int horizon = 1;
	std::string response;
	linreg::LinearModel model; // final refit on every complete row
	cv::Evaluation evaluation; // refits on each split's training rows
	featsel::SelectionReport selection;

	cv::CvPlan plan;
	std::vector<std::size_t> origins;
	Eigen::VectorXd target; // y at origin + h
	std::vector<Eigen::VectorXd> validation_predictions; // per split, empty when the split failed
	std::vector<Eigen::VectorXd> test_predictions;
};

/// The recipe a variant uses at horizon h (pool left empty).
[[nodiscard]] basis::Recipe make_recipe(basis::Variant variant, const timeseries::TimeFrame &frame,
                                        std::string_view response, int horizon, const PipelineOptions &options);

/// LASSO-ranked M0 features used as the M2/M3 candidate pool.
[[nodiscard]] std::vector<basis::Feature> interaction_pool(const timeseries::TimeFrame &frame,
                                                           std::string_view response, int horizon,
                                                           const PipelineOptions &options);

/// build_design, select_features, per-split OLS on the selected columns,
/// then the final OLS refit. `pool` is required for M2 and M3.
[[nodiscard]] Pipeline build_base_model(basis::Variant variant, const timeseries::TimeFrame &frame,
                                        std::string_view response, int horizon, const PipelineOptions &options,
                                        std::span<const basis::Feature> pool = {});

struct WeightedEnsemble {
	int horizon = 1;
	std::vector<Pipeline> members;
	std::vector<double> weights;
	std::vector<double> source_rmse; // mean validation RMSE per member
	cv::Evaluation evaluation;       // of the weighted split predictions
};

/// Softmax weights over member validation RMSE. Throws ConfigError when
/// members differ in horizon, response, design rows or CV plan.
[[nodiscard]] WeightedEnsemble build_weighted(std::vector<Pipeline> members);

/// Point forecast with its interval at one origin.
struct Prediction {
	double point = 0.0;
	double lo = 0.0;
	double hi = 0.0;
	/// Variance of the fitted mean; for an ensemble (sum w_i sd_i)^2.
	double mean_variance = 0.0;
};

/// Predictions at each origin; entries are NaN where an input is missing.
[[nodiscard]] std::vector<Prediction> predict(const Pipeline &member, const timeseries::TimeFrame &frame,
                                              std::span<const std::size_t> origins, double level = 0.95);
/// Weighted member points and bounds.
[[nodiscard]] std::vector<Prediction> predict(const WeightedEnsemble &ensemble, const timeseries::TimeFrame &frame,
                                              std::span<const std::size_t> origins, double level = 0.95);

enum class ResponseKind { average, marginal };

[[nodiscard]] std::string_view to_string(ResponseKind kind);
[[nodiscard]] ResponseKind parse_kind(std::string_view text);

enum class Route { ensemble, corrected };

/// Forecaster per horizon 1..24: its own ensemble, or the h = 6 ensemble
/// plus the residual ARIMA forecast.
struct HorizonPlan {
	std::array<Route, 24> routes{};

	[[nodiscard]] Route at(int horizon) const;
	/// Horizons needing their own ensemble (plus 6 when anything is corrected).
	[[nodiscard]] std::vector<int> ensemble_horizons() const;
	[[nodiscard]] bool any_corrected() const;
	friend bool operator==(const HorizonPlan &, const HorizonPlan &) = default;
};

/// average: 1-2 ensemble, 3-6 corrected, 7-24 ensemble.
/// marginal: 1-6 corrected, 7-24 ensemble.
[[nodiscard]] HorizonPlan default_horizon_plan(ResponseKind kind);
/// Corrected exactly at `corrected` (each in 1..6), ensembles elsewhere.
[[nodiscard]] HorizonPlan horizon_plan(std::span<const int> corrected);

struct Corrector {
	arima::ArimaModel model;
	/// Longest residual history used to rebuild the ARIMA state.
	std::size_t history_window = 2016;
};

struct CorrectorOptions {
	/// Preset name, "auto", or an order string; empty means the preset of the kind.
	std::string arima;
	std::size_t history_window = 2016;
	arima::FitOptions fit;
};

/// Residual y[u] - yhat6(u - 6) of the h = 6 ensemble over every origin
/// of `frame`; NaN where either side is missing. Indexed by target row u.
[[nodiscard]] std::vector<double> residual_series(const WeightedEnsemble &h6, const timeseries::TimeFrame &frame,
                                                  std::string_view response);

/// Fits the ARIMA corrector on the trailing contiguous run of in-sample residuals.
[[nodiscard]] Corrector fit_corrector(const WeightedEnsemble &h6, const timeseries::TimeFrame &frame,
                                      std::string_view response, ResponseKind kind,
                                      const CorrectorOptions &options = {});

/// Every horizon 1..24.
[[nodiscard]] std::vector<int> all_horizons();

struct CompoundForecaster {
	std::string response;
	ResponseKind kind = ResponseKind::average;
	HorizonPlan plan;
	/// Horizons this forecaster serves, ascending.
	std::vector<int> horizons = all_horizons();
	std::map<int, WeightedEnsemble> ensembles;
	std::optional<Corrector> corrector;

	/// Ensemble horizons the served set depends on.
	[[nodiscard]] std::vector<int> required_ensembles() const;
	[[nodiscard]] bool needs_corrector() const;
};

using EnsembleFactory = std::function<WeightedEnsemble(int horizon)>;
using CorrectorFactory = std::function<Corrector(const WeightedEnsemble &h6)>;

struct CompoundOptions {
	PipelineOptions pipeline;
	CorrectorOptions corrector;
	std::vector<basis::Variant> members{basis::Variant::M1, basis::Variant::M2, basis::Variant::M3};
	/// Overrides the kind's default plan when set.
	std::optional<std::vector<int>> corrected_horizons;
	/// Served horizons (each in 1..24); empty means all 24.
	std::vector<int> horizons;
	/// Test seams; default to the real pipelines.
	EnsembleFactory ensemble_factory;
	CorrectorFactory corrector_factory;
};

/// Ensemble of the configured members at one horizon.
[[nodiscard]] WeightedEnsemble build_horizon(const timeseries::TimeFrame &frame, std::string_view response,
                                             int horizon, const CompoundOptions &options);

[[nodiscard]] CompoundForecaster build_compound(const timeseries::TimeFrame &frame, std::string_view response,
                                                ResponseKind kind, const CompoundOptions &options = {});

struct ForecastRow {
	timeseries::HourStamp target = 0;
	int horizon = 0;
	double point = 0.0;
	double lo = 0.0;
	double hi = 0.0;
	Route route = Route::ensemble;
};

/// One row per served horizon (24 by default). Throws DataError naming the
/// column and horizon when an input is missing, or when the residual
/// history before the origin is too short for the corrector.
[[nodiscard]] std::vector<ForecastRow> forecast_24h(const CompoundForecaster &forecaster,
                                                    const timeseries::TimeFrame &frame, std::size_t origin);
/// forecast_24h at many origins, sharing the h = 6 predictions.
/// Rows are indexed by position in forecaster.horizons.
[[nodiscard]] std::vector<std::vector<ForecastRow>> forecast_paths(const CompoundForecaster &forecaster,
                                                                   const timeseries::TimeFrame &frame,
                                                                   std::span<const std::size_t> origins);

/// Out-of-sample accuracy of one served horizon over a set of origins.
struct HorizonScore {
	int horizon = 0;
	Route route = Route::ensemble;
	std::size_t n = 0;     // origins whose target is observed
	double rmse = 0.0;     // NaN when n = 0
	double coverage = 0.0; // share of targets inside the 95% interval
};

/// Forecasts from every origin, scored against the observed response.
[[nodiscard]] std::vector<HorizonScore> backtest(const CompoundForecaster &forecaster,
                                                 const timeseries::TimeFrame &frame,
                                                 std::span<const std::size_t> origins);
[[nodiscard]] nlohmann::json to_json(std::span<const HorizonScore> scores);

/// "timestamp,horizon,point,lo95,hi95", 17 significant digits.
[[nodiscard]] std::string forecast_csv(std::span<const ForecastRow> rows);

[[nodiscard]] nlohmann::json to_json(const Pipeline &pipeline);
[[nodiscard]] Pipeline pipeline_from_json(const nlohmann::json &j);
[[nodiscard]] nlohmann::json to_json(const WeightedEnsemble &ensemble);
[[nodiscard]] WeightedEnsemble ensemble_from_json(const nlohmann::json &j);

/// Per-horizon, per-member validation/test RMSE and weights.
[[nodiscard]] nlohmann::json evaluation_json(const CompoundForecaster &forecaster);

/// manifest.json, ensemble_hNN.json per ensemble horizon, corrector.json
/// and selection/hNN_<variant>.json reports. Files are written atomically.
void save(const CompoundForecaster &forecaster, const std::filesystem::path &dir);
/// Throws DataError listing every missing file.
[[nodiscard]] CompoundForecaster load(const std::filesystem::path &dir);

} // namespace gridcast::ensemble
