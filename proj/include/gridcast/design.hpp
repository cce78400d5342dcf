#pragma once

#include "gridcast/basis.hpp"
#include "gridcast/timeseries.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gridcast::basis {

enum class FeatureKind {
	current,          // source column at the target time (forecast classes) or origin (real_time)
	moving_average,   // trailing mean of a source column ending at the origin
	response_lag,     // response at the origin
	fourier_sin,
	fourier_cos,
	tau,              // one of the 15 periodic time variables at the target time
	exp_standardized, // exp((operand - mean) / scale)
	bspline,          // basis function `index` of the operand
	nspline,
	product,          // operand 0 * operand 1
};

enum class Clock { hour, month };

/// Recipe for recomputing one design column from a frame. Features form a
/// tree: transforms hold their operands.
struct Feature {
	FeatureKind kind = FeatureKind::current;
	std::string column;
	std::size_t window = 0;
	int order = 0;
	double period = 0.0;
	Clock clock = Clock::hour;
	int index = 0;
	double mean = 0.0;
	double scale = 1.0;
	KnotVector knots;
	std::vector<Feature> operands;

	/// Unique, human-readable identifier, e.g. "ma24[wind]" or "bs2(x[a]*tau.hour_s3)".
	[[nodiscard]] std::string id() const;
};

[[nodiscard]] Feature current(std::string column);
[[nodiscard]] Feature moving_average(std::string column, std::size_t window);
[[nodiscard]] Feature response_lag(std::string response);
[[nodiscard]] Feature fourier(bool sine, int order, double period, Clock clock);
[[nodiscard]] Feature tau(int index);
[[nodiscard]] Feature exp_standardized(Feature operand, double mean, double scale);
[[nodiscard]] Feature bspline(Feature operand, KnotVector knots, int index);
[[nodiscard]] Feature nspline(Feature operand, KnotVector knots, int index);
[[nodiscard]] Feature product(Feature a, Feature b);

[[nodiscard]] nlohmann::json to_json(const Feature &feature);
[[nodiscard]] Feature feature_from_json(const nlohmann::json &j);

/// Evaluates features at a fixed set of forecast origins for horizon h.
/// Leaf and product columns are memoised by id; spline outputs are not.
class Evaluator {
public:
	Evaluator(const timeseries::TimeFrame &frame, std::string response, int horizon,
	          std::vector<std::size_t> origins);

	[[nodiscard]] std::size_t size() const noexcept { return origins_.size(); }
	[[nodiscard]] const std::vector<std::size_t> &origins() const noexcept { return origins_; }

	/// Values of the feature at every origin (missing where inputs are).
	[[nodiscard]] std::vector<double> evaluate(const Feature &feature);
	/// Cached variant for features worth memoising (leaves and products).
	[[nodiscard]] const std::vector<double> &cached(const Feature &feature);

private:
	const timeseries::TimeFrame &frame_;
	std::string response_;
	int horizon_;
	std::vector<std::size_t> origins_;
	std::unordered_map<std::string, std::vector<double>> cache_;

	[[nodiscard]] std::vector<double> leaf(const Feature &feature) const;
};

/// Design rows with the provenance of each column and the frame row
/// (forecast origin) of each design row.
class FeatureMatrix {
public:
	FeatureMatrix() = default;
	FeatureMatrix(Eigen::MatrixXd data, std::vector<Feature> provenance, std::vector<std::size_t> origins);

	[[nodiscard]] const Eigen::MatrixXd &data() const noexcept { return data_; }
	[[nodiscard]] Eigen::Index rows() const noexcept { return data_.rows(); }
	[[nodiscard]] Eigen::Index cols() const noexcept { return data_.cols(); }
	[[nodiscard]] const std::vector<Feature> &provenance() const noexcept { return provenance_; }
	[[nodiscard]] const std::vector<std::size_t> &origins() const noexcept { return origins_; }
	[[nodiscard]] std::vector<std::string> names() const;

	/// Columns by index, keeping rows and origins.
	[[nodiscard]] FeatureMatrix select(std::span<const std::size_t> columns) const;

private:
	Eigen::MatrixXd data_;
	std::vector<Feature> provenance_;
	std::vector<std::size_t> origins_;
};

enum class Variant { M0, M1, M2, M3 };

[[nodiscard]] std::string_view to_string(Variant variant);
[[nodiscard]] Variant parse_variant(std::string_view text);

struct Recipe {
	Variant variant = Variant::M0;
	std::string response;
	/// Source columns; the response must not be listed.
	std::vector<std::string> columns;
	std::vector<std::size_t> ma_windows{24, 48};
	std::size_t interaction_pool = 50;
	int bs_count = 4;
	int ns_count = 4;
	/// M2/M3 only: ranked candidate features (from M0), truncated to interaction_pool.
	std::vector<Feature> pool;
};

[[nodiscard]] nlohmann::json to_json(const Recipe &recipe);
[[nodiscard]] Recipe recipe_from_json(const nlohmann::json &j);

/// Non-response columns whose availability class permits horizon h.
[[nodiscard]] std::vector<std::string> available_columns(const timeseries::TimeFrame &frame,
                                                         std::string_view response, int horizon);

struct Design {
	FeatureMatrix X;
	Eigen::VectorXd y; // response at origin + h
};

/// Assembles the variant's design over the complete origins: rows where
/// the base features and y[t+h] are all present. Constant columns are
/// dropped and logged. Throws ConfigError for unavailable or unknown columns.
[[nodiscard]] Design build_design(const timeseries::TimeFrame &frame, int horizon, const Recipe &recipe);

/// The z* block: current, moving averages per source column, then lag(y).
[[nodiscard]] std::vector<Feature> base_features(const Recipe &recipe);
/// FS(2,24) and FS(1,168) on the hour clock, FS(2,12) on the month clock.
[[nodiscard]] std::vector<Feature> fourier_features();

/// Values of the features at a single origin. Throws DataError naming the
/// feature and horizon when an input is missing.
[[nodiscard]] Eigen::VectorXd design_row(const timeseries::TimeFrame &frame, std::string_view response,
                                         int horizon, std::size_t origin, std::span<const Feature> features);

/// CSV with one "# <col>: <provenance json>" comment per column, then a
/// header (origin timestamp, feature ids) and the rows.
[[nodiscard]] std::string to_csv(const FeatureMatrix &X, const timeseries::TimeFrame &frame);

} // namespace gridcast::basis
