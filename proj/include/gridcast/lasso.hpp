#pragma once

#include "gridcast/cv.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gridcast::lasso {

// Objective throughout: ||y - X b||^2 + lambda * ||b||_1 (un-normalised),
// so the soft-threshold constant is lambda / 2 and lambda_max = 2 max|X'y|.

struct LassoOptions {
	double tol = 1e-7;   // max coordinate change in a full sweep
	int max_iter = 10000; // sweeps
	bool record_objective = false;
	/// Coordinate visiting order for full sweeps; empty means 0..m-1.
	std::vector<Eigen::Index> order;
};

struct LassoFit {
	double lambda = 0.0;
	Eigen::VectorXd beta;
	std::vector<Eigen::Index> active_set;
	int n_iter = 0;
	bool converged = false;
	std::vector<double> objective; // one value per sweep when recorded
};

/// Sufficient statistics of a standardised problem.
struct GramProblem {
	Eigen::MatrixXd gram; // X'X
	Eigen::VectorXd xty;  // X'y
	double yty = 0.0;
	Eigen::Index n = 0;
};

/// Throws ConfigError unless every column has |mean| <= 1e-8 and 1/n
/// variance within 1e-6 of one.
void check_standardized(const Eigen::MatrixXd &X);

/// Cyclic coordinate descent on a standardised design and centred response.
[[nodiscard]] LassoFit fit_lasso(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, double lambda,
                                 const LassoOptions &options = {}, const Eigen::VectorXd *warm_start = nullptr);

/// Covariance-form coordinate descent; the same iterates as fit_lasso
/// without touching the rows.
[[nodiscard]] LassoFit fit_gram(const GramProblem &problem, double lambda, const LassoOptions &options = {},
                                const Eigen::VectorXd *warm_start = nullptr);

[[nodiscard]] double lambda_max(const Eigen::MatrixXd &X, const Eigen::VectorXd &y);
[[nodiscard]] double lambda_max(const GramProblem &problem);

/// Geometric grid from lambda_max down to lambda_max * ratio.
[[nodiscard]] std::vector<double> geometric_path(double lambda_max, int n_lambdas, double ratio);
[[nodiscard]] std::vector<double> lambda_path(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, int n_lambdas,
                                              double ratio);

/// Warm-started fits along a descending path.
[[nodiscard]] std::vector<LassoFit> fit_path(const GramProblem &problem, std::span<const double> path,
                                             const LassoOptions &options = {});

/// Column means and 1/n standard deviations; scale 0 marks a constant column.
struct Standardization {
	Eigen::VectorXd mean;
	Eigen::VectorXd scale;
	double y_mean = 0.0;
};

/// Shifted cross-product sums of [X, y] over row prefixes [0, end) for a
/// set of ends, accumulated in one pass over the rows.
class PrefixMoments {
public:
	PrefixMoments(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, std::vector<std::size_t> ends);

	struct Snapshot {
		std::size_t n = 0;
		Eigen::VectorXd sx;  // sum of (x - shift)
		Eigen::MatrixXd sxx; // sum of (x - shift)(x - shift)'
		double sy = 0.0;
		Eigen::VectorXd sxy;
		double syy = 0.0;
	};

	[[nodiscard]] const Snapshot &at(std::size_t end) const;
	[[nodiscard]] const Eigen::VectorXd &x_shift() const noexcept { return x_shift_; }
	[[nodiscard]] double y_shift() const noexcept { return y_shift_; }

	/// Standardised problem over rows [0, end) restricted to `columns`.
	/// Constant columns get zero cross-products and scale 0 so their
	/// coefficient stays at zero.
	[[nodiscard]] GramProblem problem(std::size_t end, std::span<const Eigen::Index> columns,
	                                  Standardization &stats) const;

private:
	std::vector<std::size_t> ends_;
	std::vector<Snapshot> snapshots_;
	Eigen::VectorXd x_shift_;
	double y_shift_ = 0.0;
};

struct LambdaSelection {
	std::vector<double> path;             // on the selection-row scale
	std::vector<double> mean_rmse;        // NaN where the lambda was skipped
	std::vector<double> mean_active;      // mean active-set size over splits
	std::size_t best = 0;
	double lambda = 0.0;
	/// Per split: active columns at the chosen lambda, as indices into the
	/// `columns` argument of select_lambda.
	std::vector<std::vector<Eigen::Index>> split_active;
	/// Standardised coefficients of the last split at the chosen lambda.
	Eigen::VectorXd last_split_beta;
};

struct SelectionOptions {
	int n_lambdas = 100;
	double ratio = 1e-3;
	LassoOptions lasso;
};

/// Chooses lambda by mean validation RMSE over the plan's splits. The path
/// is built on rows [0, selection_end); in split k the penalty is scaled by
/// n_train_k / selection_end. Ties go to the larger lambda; a lambda whose
/// active set reaches a split's training size is skipped. Throws
/// NumericalError when every lambda is skipped.
[[nodiscard]] LambdaSelection select_lambda(const Eigen::MatrixXd &X, const Eigen::VectorXd &y,
                                            const cv::CvPlan &plan, const PrefixMoments &moments,
                                            std::span<const Eigen::Index> columns,
                                            const SelectionOptions &options = {});
/// Convenience overload over all columns.
[[nodiscard]] LambdaSelection select_lambda(const Eigen::MatrixXd &X, const Eigen::VectorXd &y,
                                            const cv::CvPlan &plan, const SelectionOptions &options = {});

/// Row ends needed by select_lambda: every split's training end plus the selection end.
[[nodiscard]] std::vector<std::size_t> plan_ends(const cv::CvPlan &plan);

/// "lambda,mean_active,mean_validation_rmse" rows.
[[nodiscard]] std::string path_csv(const LambdaSelection &selection);

} // namespace gridcast::lasso
