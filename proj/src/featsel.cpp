#include "gridcast/featsel.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"
#include "gridcast/linreg.hpp"
#include "gridcast/log.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gridcast::featsel {

namespace {

constexpr const char *kModule = "featsel";
constexpr double kPivotRatio = 1e-12;
// Mean-RMSE improvements below this fraction of the response scale are
// treated as rounding noise.
constexpr double kRoundoff = 1e-12;

std::vector<Index> all_columns(Index m) {
	std::vector<Index> out(static_cast<std::size_t>(m));
	std::iota(out.begin(), out.end(), Index{0});
	return out;
}

double response_scale(const lasso::PrefixMoments &moments, std::size_t end) {
	const auto &s = moments.at(end);
	const auto n = static_cast<double>(s.n);
	const double vbar = s.sy / n;
	return std::sqrt(std::max(0.0, s.syy / n - vbar * vbar)) + std::abs(moments.y_shift() + vbar);
}

} // namespace

PruneResult prune_correlated(const lasso::PrefixMoments &moments, std::size_t end, std::span<const Index> columns,
                             double threshold) {
	lasso::Standardization stats;
	const lasso::GramProblem p = moments.problem(end, columns, stats);
	const auto n = static_cast<double>(p.n);
	PruneResult out;
	std::vector<Index> kept_pos;
	for (Index j = 0; j < static_cast<Index>(columns.size()); ++j) {
		const Index col = columns[static_cast<std::size_t>(j)];
		if (stats.scale(j) == 0.0) {
			out.removed.push_back({kept_pos.empty() ? col : columns[static_cast<std::size_t>(kept_pos.front())], col,
			                       std::numeric_limits<double>::quiet_NaN()});
			continue;
		}
		bool drop = false;
		for (Index i : kept_pos) {
			const double rho = p.gram(i, j) / n;
			if (std::abs(rho) > threshold) {
				out.removed.push_back({columns[static_cast<std::size_t>(i)], col, std::clamp(rho, -1.0, 1.0)});
				drop = true;
				break;
			}
		}
		if (!drop) {
			kept_pos.push_back(j);
			out.kept.push_back(col);
		}
	}
	return out;
}

PruneResult prune_correlated(const Eigen::MatrixXd &X, double threshold) {
	const lasso::PrefixMoments moments(X, Eigen::VectorXd::Zero(X.rows()), {static_cast<std::size_t>(X.rows())});
	const auto cols = all_columns(X.cols());
	return prune_correlated(moments, static_cast<std::size_t>(X.rows()), cols, threshold);
}

AliasResult drop_aliased(const lasso::PrefixMoments &moments, std::size_t end, std::span<const Index> columns,
                         double tolerance) {
	lasso::Standardization stats;
	const lasso::GramProblem p = moments.problem(end, columns, stats);
	const auto n = static_cast<double>(p.n);
	const auto m = static_cast<Index>(columns.size());
	AliasResult out;
	// Incremental Cholesky factor of the kept columns' correlation matrix.
	Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
	std::vector<Index> kept_pos;
	for (Index j = 0; j < m; ++j) {
		const auto k = static_cast<Index>(kept_pos.size());
		double resid = 0.0;
		Eigen::VectorXd l(k);
		if (stats.scale(j) > 0.0) {
			for (Index i = 0; i < k; ++i) {
				l(i) = p.gram(kept_pos[static_cast<std::size_t>(i)], j) / n;
			}
			L.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(l);
			resid = 1.0 - l.squaredNorm();
		}
		const Index col = columns[static_cast<std::size_t>(j)];
		if (resid <= tolerance) {
			out.aliased.push_back(col);
			out.residual.push_back(std::max(resid, 0.0));
			continue;
		}
		L.row(k).head(k) = l.transpose();
		L(k, k) = std::sqrt(resid);
		kept_pos.push_back(j);
		out.kept.push_back(col);
	}
	return out;
}

std::optional<double> cv_rmse(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, const cv::CvPlan &plan,
                              const lasso::PrefixMoments &moments, std::span<const Index> columns) {
	double sum = 0.0;
	for (const auto &split : plan.splits) {
		lasso::Standardization stats;
		const lasso::GramProblem p = moments.problem(split.train.end, columns, stats);
		if ((stats.scale.array() == 0.0).any() || split.train.size() <= columns.size() + 1) {
			return std::nullopt;
		}
		Eigen::VectorXd b;
		if (!columns.empty()) {
			const Eigen::LDLT<Eigen::MatrixXd> ldlt(p.gram);
			const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
			if (ldlt.info() != Eigen::Success || d.minCoeff() < kPivotRatio * d.maxCoeff()) {
				return std::nullopt;
			}
			b = ldlt.solve(p.xty);
		}
		const auto v0 = static_cast<Index>(split.validation.begin);
		const auto nv = static_cast<Index>(split.validation.size());
		Eigen::VectorXd pred = Eigen::VectorXd::Constant(nv, stats.y_mean);
		for (std::size_t j = 0; j < columns.size(); ++j) {
			const auto jj = static_cast<Index>(j);
			pred += (b(jj) / stats.scale(jj)) * (X.col(columns[j]).segment(v0, nv).array() - stats.mean(jj)).matrix();
		}
		sum += linreg::rmse(Eigen::VectorXd(y.segment(v0, nv)), pred);
	}
	return sum / static_cast<double>(plan.splits.size());
}

ForwardResult forward_select(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, const cv::CvPlan &plan,
                             const lasso::PrefixMoments &moments, std::span<const Index> candidates,
                             std::span<const Index> base) {
	ForwardResult out;
	const double noise = kRoundoff * response_scale(moments, plan.selection_end());
	std::vector<Index> selected(base.begin(), base.end());
	double best = std::numeric_limits<double>::infinity();
	std::vector<Index> remaining;

	if (selected.empty()) {
		Index first = -1;
		for (Index c : candidates) {
			const std::vector<Index> single{c};
			const auto score = cv_rmse(X, y, plan, moments, single);
			if (!score) {
				out.rank_deficient.push_back(c);
				continue;
			}
			if (*score < best) {
				best = *score;
				first = c;
			}
		}
		if (first < 0) {
			throw NumericalError(kModule, "no candidate column can be fitted on its own");
		}
		selected.push_back(first);
		out.accepted_rmse.push_back(best);
		for (Index c : candidates) {
			if (c != first &&
			    std::find(out.rank_deficient.begin(), out.rank_deficient.end(), c) == out.rank_deficient.end()) {
				remaining.push_back(c);
			}
		}
	} else {
		const auto score = cv_rmse(X, y, plan, moments, selected);
		if (!score) {
			throw NumericalError(kModule, "the base column set is rank deficient");
		}
		best = *score;
		for (Index c : candidates) {
			if (std::find(selected.begin(), selected.end(), c) == selected.end()) {
				remaining.push_back(c);
			}
		}
	}

	for (Index c : remaining) {
		selected.push_back(c);
		const auto score = cv_rmse(X, y, plan, moments, selected);
		if (!score) {
			log::info(kModule, "candidate column " + std::to_string(c) + " skipped: rank deficient");
			out.rank_deficient.push_back(c);
			selected.pop_back();
		} else if (*score < best - noise) {
			best = *score;
			out.accepted_rmse.push_back(best);
		} else {
			selected.pop_back();
		}
	}
	out.selected = std::move(selected);
	out.validation_rmse = best;
	return out;
}

ForwardResult forward_select(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, const cv::CvPlan &plan,
                             std::span<const Index> base) {
	const lasso::PrefixMoments moments(X, y, lasso::plan_ends(plan));
	const auto cols = all_columns(X.cols());
	return forward_select(X, y, plan, moments, cols, base);
}

SelectionReport select_features(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, const cv::CvPlan &plan,
                                const SelectOptions &options, std::span<const std::string> names) {
	if (X.cols() == 0) {
		throw ConfigError(kModule, "design has no columns");
	}
	if (!names.empty() && static_cast<Index>(names.size()) != X.cols()) {
		throw ConfigError(kModule, "names do not match design columns");
	}
	const lasso::PrefixMoments moments(X, y, lasso::plan_ends(plan));
	SelectionReport report;

	const auto start = all_columns(X.cols());
	const PruneResult pruned = prune_correlated(moments, plan.selection_end(), start, options.correlation_threshold);
	{
		Round r{"prune", start.size(), pruned.kept.size(), {}};
		for (const auto &pair : pruned.removed) {
			r.criterion.push_back(pair.rho);
		}
		report.rounds.push_back(std::move(r));
	}
	if (pruned.kept.empty()) {
		throw NumericalError(kModule, "correlation pruning left no columns; raise the threshold");
	}
	const AliasResult alias = drop_aliased(moments, plan.selection_end(), pruned.kept);
	report.rounds.push_back({"alias", pruned.kept.size(), alias.kept.size(), alias.residual});
	std::vector<Index> cols = alias.kept;

	const auto max_rounds = static_cast<std::size_t>(X.cols()) + 1;
	for (std::size_t round = 0; round < max_rounds; ++round) {
		const std::size_t before = cols.size();
		const lasso::LambdaSelection sel = lasso::select_lambda(X, y, plan, moments, cols, options.lasso);
		std::vector<Index> keep;
		for (std::size_t j = 0; j < cols.size(); ++j) {
			const auto pos = static_cast<Index>(j);
			const bool everywhere = std::all_of(sel.split_active.begin(), sel.split_active.end(), [&](const auto &a) {
				return std::binary_search(a.begin(), a.end(), pos);
			});
			if (everywhere) {
				keep.push_back(cols[j]);
			}
		}
		if (round == 0) {
			std::vector<std::pair<Index, double>> ranked;
			for (Index j = 0; j < sel.last_split_beta.size(); ++j) {
				if (sel.last_split_beta(j) != 0.0) {
					ranked.emplace_back(cols[static_cast<std::size_t>(j)], std::abs(sel.last_split_beta(j)));
				}
			}
			std::stable_sort(ranked.begin(), ranked.end(), [&](const auto &a, const auto &b) {
				if (a.second != b.second) {
					return a.second > b.second;
				}
				if (!names.empty()) {
					return names[static_cast<std::size_t>(a.first)] < names[static_cast<std::size_t>(b.first)];
				}
				return a.first < b.first;
			});
			for (const auto &[c, v] : ranked) {
				report.lasso_ranking.push_back(c);
			}
		}
		report.lambda = sel.lambda;
		report.rounds.push_back({"lasso", cols.size(), keep.size(), {sel.lambda, sel.mean_rmse[sel.best]}});
		if (keep.empty()) {
			throw NumericalError(kModule, "LASSO kept no columns in every split; lower the path ratio or "
			                              "relax the correlation threshold");
		}
		const ForwardResult fwd = forward_select(X, y, plan, moments, keep);
		report.rounds.push_back({"forward", keep.size(), fwd.selected.size(), fwd.accepted_rmse});
		report.validation_rmse = fwd.validation_rmse;
		// Keep the design's column order for determinism of downstream fits.
		cols = fwd.selected;
		std::sort(cols.begin(), cols.end());
		if (cols.size() >= before) {
			break;
		}
	}
	report.final_columns = cols;
	return report;
}

SelectionReport select_features(const basis::FeatureMatrix &X, const Eigen::VectorXd &y, const cv::CvPlan &plan,
                                const SelectOptions &options) {
	const auto names = X.names();
	SelectionReport report = select_features(X.data(), y, plan, options, names);
	for (Index c : report.final_columns) {
		report.final_features.push_back(X.provenance()[static_cast<std::size_t>(c)]);
	}
	return report;
}

nlohmann::json to_json(const SelectionReport &report) {
	nlohmann::json j;
	auto rounds = nlohmann::json::array();
	for (const auto &r : report.rounds) {
		auto crit = nlohmann::json::array();
		for (double v : r.criterion) {
			crit.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
		}
		rounds.push_back({{"step", r.step}, {"columns_in", r.columns_in}, {"columns_out", r.columns_out},
		                  {"criterion", std::move(crit)}});
	}
	j["rounds"] = std::move(rounds);
	j["final_columns"] = report.final_columns;
	auto features = nlohmann::json::array();
	for (const auto &f : report.final_features) {
		features.push_back(f.id());
	}
	j["final_features"] = std::move(features);
	j["lambda"] = report.lambda;
	j["validation_rmse"] = report.validation_rmse;
	j["lasso_ranking"] = report.lasso_ranking;
	return j;
}

} // namespace gridcast::featsel
