#pragma once

#include "gridcast/cv.hpp"
#include "gridcast/design.hpp"
#include "gridcast/lasso.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridcast::featsel {

using Index = Eigen::Index;

struct RemovedPair {
	Index kept = 0;
	Index removed = 0;
	double rho = 0.0; // NaN when the removed column is constant
};

struct PruneResult {
	std::vector<Index> kept;
	std::vector<RemovedPair> removed;
};

/// Greedy scan in column order over rows [0, end): a column is removed when
/// |Pearson rho| with an earlier kept column exceeds the threshold, or when
/// it is constant on those rows.
[[nodiscard]] PruneResult prune_correlated(const lasso::PrefixMoments &moments, std::size_t end,
                                           std::span<const Index> columns, double threshold = 0.99);
/// Over all rows and columns of X.
[[nodiscard]] PruneResult prune_correlated(const Eigen::MatrixXd &X, double threshold = 0.99);

struct AliasResult {
	std::vector<Index> kept;
	std::vector<Index> aliased;
	std::vector<double> residual; // unexplained variance fraction of each aliased column
};

/// Greedy scan in column order over rows [0, end): a column is aliased when
/// the earlier kept columns explain all but `tolerance` of its variance
/// (exact linear dependencies such as spline blocks summing to one).
[[nodiscard]] AliasResult drop_aliased(const lasso::PrefixMoments &moments, std::size_t end,
                                       std::span<const Index> columns, double tolerance = 1e-8);

struct ForwardResult {
	std::vector<Index> selected;        // column indices in acceptance order
	std::vector<double> accepted_rmse;  // mean validation RMSE after each acceptance
	std::vector<Index> rank_deficient;  // candidates skipped
	double validation_rmse = 0.0;
};

/// Mean validation RMSE of OLS (with intercept) on `columns`, refit on each
/// split's training rows from per-split standardised cross-products.
/// Returns nullopt when a split's system is rank deficient (pivot ratio < 1e-12).
[[nodiscard]] std::optional<double> cv_rmse(const Eigen::MatrixXd &X, const Eigen::VectorXd &y,
                                            const cv::CvPlan &plan, const lasso::PrefixMoments &moments,
                                            std::span<const Index> columns);

/// Single pass in candidate order: start from the best single candidate
/// (or the base), add each remaining candidate and keep it iff the mean
/// validation RMSE strictly decreases.
[[nodiscard]] ForwardResult forward_select(const Eigen::MatrixXd &X, const Eigen::VectorXd &y,
                                           const cv::CvPlan &plan, const lasso::PrefixMoments &moments,
                                           std::span<const Index> candidates, std::span<const Index> base = {});
[[nodiscard]] ForwardResult forward_select(const Eigen::MatrixXd &X, const Eigen::VectorXd &y,
                                           const cv::CvPlan &plan, std::span<const Index> base = {});

struct Round {
	std::string step; // "prune", "alias", "lasso" or "forward"
	std::size_t columns_in = 0;
	std::size_t columns_out = 0;
	std::vector<double> criterion;
};

struct SelectionReport {
	std::vector<Round> rounds;
	std::vector<Index> final_columns; // indices into the input design
	std::vector<basis::Feature> final_features;
	double lambda = 0.0;          // chosen in the last LASSO step
	double validation_rmse = 0.0; // forward-selection criterion of the final set
	/// Columns active in the last split of the first LASSO step, ordered by
	/// |standardised coefficient| (ties by feature id).
	std::vector<Index> lasso_ranking;
};

struct SelectOptions {
	double correlation_threshold = 0.99;
	lasso::SelectionOptions lasso;
};

/// prune and alias removal, then LASSO (keep columns active in every split at the chosen
/// lambda) and forward selection, repeated until the column count stops
/// decreasing. Throws NumericalError if a step leaves no columns.
[[nodiscard]] SelectionReport select_features(const basis::FeatureMatrix &X, const Eigen::VectorXd &y,
                                              const cv::CvPlan &plan, const SelectOptions &options = {});
/// Same over a bare matrix; `names` (optional) orders ranking ties.
[[nodiscard]] SelectionReport select_features(const Eigen::MatrixXd &X, const Eigen::VectorXd &y,
                                              const cv::CvPlan &plan, const SelectOptions &options,
                                              std::span<const std::string> names);

[[nodiscard]] nlohmann::json to_json(const SelectionReport &report);

} // namespace gridcast::featsel
