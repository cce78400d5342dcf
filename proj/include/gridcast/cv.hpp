#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gridcast::cv {

/// Half-open row range [begin, end).
struct Range {
	std::size_t begin = 0;
	std::size_t end = 0;
	[[nodiscard]] std::size_t size() const noexcept { return end - begin; }
	friend bool operator==(const Range &, const Range &) = default;
};

struct Split {
	Range train;
	Range validation;
	Range test;
};

/// Rolling-forward plan: split k trains on [0, min_train + (k-1)(val+test)),
/// validates on the next val rows and tests on the following test rows.
struct CvPlan {
	std::size_t n_rows = 0;
	std::vector<Split> splits;

	/// End of the last validation range: rows [0, selection_end) may inform
	/// model selection, later rows are test-only.
	[[nodiscard]] std::size_t selection_end() const;
};

inline constexpr std::size_t kDefaultSplits = 8;
inline constexpr std::size_t kDefaultWindow = 672; // four weeks of hours

/// Throws ConfigError naming the minimal row count when n_rows is short.
[[nodiscard]] CvPlan make_plan(std::size_t n_rows, std::size_t n_splits, std::size_t validation_len,
                               std::size_t test_len, std::size_t min_train_len);

/// make_plan with min_train = n_rows - n_splits * (validation_len + test_len).
[[nodiscard]] CvPlan default_plan(std::size_t n_rows, std::size_t n_splits = kDefaultSplits,
                                  std::size_t validation_len = kDefaultWindow,
                                  std::size_t test_len = kDefaultWindow);

/// Predicts rows of a design; produced by a Fitter from training rows.
using Predictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd &)>;
using Fitter = std::function<Predictor(const Eigen::MatrixXd &, const Eigen::VectorXd &)>;

struct SplitMetrics {
	bool ok = false;
	std::string error;
	double validation_rmse = 0.0;
	double test_rmse = 0.0; // NaN when the split has no test rows
};

struct Evaluation {
	std::vector<SplitMetrics> splits;
	double mean_validation_rmse = 0.0;
	double mean_test_rmse = 0.0;
	bool complete = false;
};

/// Refits from scratch on each split's training rows and scores the
/// validation and test rows. Fit failures (gridcast::Error) are recorded
/// per split; means cover the successful splits in split order.
[[nodiscard]] Evaluation evaluate(const Fitter &fitter, const Eigen::MatrixXd &X, const Eigen::VectorXd &y,
                                  const CvPlan &plan);

[[nodiscard]] nlohmann::json to_json(const CvPlan &plan);
[[nodiscard]] nlohmann::json to_json(const Evaluation &evaluation);
[[nodiscard]] Evaluation evaluation_from_json(const nlohmann::json &j);

} // namespace gridcast::cv
