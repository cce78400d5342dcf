#pragma once

#include "gridcast/design.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <span>
#include <utility>
#include <vector>

namespace gridcast::linreg {

/// OLS fit on a design whose first column is the intercept.
struct LinearModel {
	Eigen::VectorXd beta;     // intercept first
	double sigma2 = 0.0;      // RSS / dof
	Eigen::MatrixXd xtx_inv;  // (X'X)^-1
	int dof = 0;              // n - m
	std::vector<basis::Feature> features; // provenance of the non-intercept columns (may be empty)
};

/// Relative pivot threshold below which the design counts as rank deficient.
inline constexpr double kRankThreshold = 1e-10;

/// Fits beta by column-pivoted QR. X must contain the intercept column.
/// Throws ConfigError unless n > m, NumericalError (naming a dependent
/// column) when rank deficient.
[[nodiscard]] LinearModel fit_ols(const Eigen::MatrixXd &X, const Eigen::VectorXd &y,
                                  std::vector<basis::Feature> features = {});

/// Prepends the intercept column to a design and fits.
[[nodiscard]] LinearModel fit_design(const basis::FeatureMatrix &X, const Eigen::VectorXd &y);
[[nodiscard]] Eigen::MatrixXd with_intercept(const Eigen::MatrixXd &X);

/// row includes the leading 1.
[[nodiscard]] double predict(const LinearModel &model, const Eigen::Ref<const Eigen::VectorXd> &row);
[[nodiscard]] Eigen::VectorXd predict_rows(const LinearModel &model, const Eigen::MatrixXd &X_with_intercept);

/// sigma2 * z'(X'X)^-1 z: variance of the fitted mean at z.
[[nodiscard]] double mean_variance(const LinearModel &model, const Eigen::Ref<const Eigen::VectorXd> &row);

struct Interval {
	double lo = 0.0;
	double hi = 0.0;
};

/// point -/+ t_{(1+level)/2, dof} * sqrt(sigma2 * (1 + z'(X'X)^-1 z)).
[[nodiscard]] Interval prediction_interval(const LinearModel &model, const Eigen::Ref<const Eigen::VectorXd> &row,
                                           double level = 0.95);

[[nodiscard]] double rmse(std::span<const double> y_true, std::span<const double> y_pred);
[[nodiscard]] double rmse(const Eigen::VectorXd &y_true, const Eigen::VectorXd &y_pred);

[[nodiscard]] nlohmann::json to_json(const LinearModel &model);
[[nodiscard]] LinearModel model_from_json(const nlohmann::json &j);

} // namespace gridcast::linreg
