#include "gridcast/lasso.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"
#include "gridcast/linreg.hpp"
#include "gridcast/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace gridcast::lasso {

namespace {

constexpr const char *kModule = "lasso";
constexpr std::size_t kChunk = 256;
// Active-set Newton steps: size cap and LDLT pivot ratio below which the
// restricted Gram counts as singular.
constexpr Eigen::Index kNewtonMax = 1500;
constexpr double kNewtonPivot = 1e-10;

double soft_threshold(double rho, double t) {
	if (rho > t) {
		return rho - t;
	}
	if (rho < -t) {
		return rho + t;
	}
	return 0.0;
}

LassoFit coordinate_descent(const GramProblem &p, double lambda, const LassoOptions &opt, const Eigen::VectorXd *warm,
                            const std::function<double(const Eigen::VectorXd &)> &objective) {
	const Eigen::Index m = p.gram.rows();
	if (!(lambda >= 0.0) || !(opt.tol > 0.0) || opt.max_iter < 1) {
		throw ConfigError(kModule, "need lambda >= 0, tol > 0 and max_iter >= 1");
	}
	if (p.gram.cols() != m || p.xty.size() != m) {
		throw ConfigError(kModule, "inconsistent Gram problem");
	}
	std::vector<Eigen::Index> order = opt.order;
	if (order.empty()) {
		order.resize(static_cast<std::size_t>(m));
		std::iota(order.begin(), order.end(), Eigen::Index{0});
	} else {
		auto sorted = order;
		std::sort(sorted.begin(), sorted.end());
		for (std::size_t i = 0; i < sorted.size(); ++i) {
			if (sorted[i] != static_cast<Eigen::Index>(i) || sorted.size() != static_cast<std::size_t>(m)) {
				throw ConfigError(kModule, "visit order must be a permutation of the columns");
			}
		}
	}

	LassoFit fit;
	fit.lambda = lambda;
	fit.beta = Eigen::VectorXd::Zero(m);
	if (warm != nullptr) {
		if (warm->size() != m) {
			throw ConfigError(kModule, "warm start has the wrong length");
		}
		fit.beta = *warm;
	}
	Eigen::VectorXd r = p.xty;
	for (Eigen::Index j = 0; j < m; ++j) {
		if (fit.beta(j) != 0.0) {
			r.noalias() -= p.gram.col(j) * fit.beta(j);
		}
	}
	const double half = lambda / 2.0;

	auto update = [&](Eigen::Index j) {
		const double g = p.gram(j, j);
		if (g <= 0.0) {
			return 0.0;
		}
		const double next = soft_threshold(r(j) + g * fit.beta(j), half) / g;
		const double delta = next - fit.beta(j);
		if (delta != 0.0) {
			r.noalias() -= p.gram.col(j) * delta;
			fit.beta(j) = next;
		}
		return std::abs(delta);
	};
	// With the active set and signs fixed the objective is quadratic on
	// that orthant face. Move towards its minimiser; when a coefficient
	// would change sign, stop at zero, drop it and solve again. Every step
	// lowers the objective. Returns false when no progress was made.
	auto newton_step = [&](std::vector<Eigen::Index> active) {
		bool moved = false;
		while (!active.empty()) {
			const auto k = static_cast<Eigen::Index>(active.size());
			if (k > kNewtonMax || k >= p.n) {
				return moved;
			}
			Eigen::MatrixXd g(k, k);
			Eigen::VectorXd rhs(k);
			for (Eigen::Index a = 0; a < k; ++a) {
				const auto ja = active[static_cast<std::size_t>(a)];
				for (Eigen::Index b = 0; b < k; ++b) {
					g(a, b) = p.gram(ja, active[static_cast<std::size_t>(b)]);
				}
				rhs(a) = r(ja) - half * (fit.beta(ja) > 0.0 ? 1.0 : -1.0);
			}
			Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
			Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
			if (ldlt.info() != Eigen::Success || d.minCoeff() <= kNewtonPivot * d.maxCoeff()) {
				// Singular face: a ridge-damped step still descends, and along
				// the flat directions it runs into a sign change, which drops
				// the redundant coefficient.
				g.diagonal().array() += kNewtonPivot * g.diagonal().maxCoeff();
				ldlt.compute(g);
				d = ldlt.vectorD().cwiseAbs();
				if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 0.0)) {
					return moved;
				}
			}
			Eigen::VectorXd target = ldlt.solve(rhs);
			for (Eigen::Index a = 0; a < k; ++a) {
				target(a) += fit.beta(active[static_cast<std::size_t>(a)]);
			}
			double step = 1.0;
			Eigen::Index blocking = -1;
			for (Eigen::Index a = 0; a < k; ++a) {
				const double cur = fit.beta(active[static_cast<std::size_t>(a)]);
				if (target(a) * cur <= 0.0) {
					const double t = cur / (cur - target(a));
					if (t < step) {
						step = t;
						blocking = a;
					}
				}
			}
			for (Eigen::Index a = 0; a < k; ++a) {
				const auto ja = active[static_cast<std::size_t>(a)];
				const double next = a == blocking ? 0.0 : fit.beta(ja) + step * (target(a) - fit.beta(ja));
				r.noalias() -= p.gram.col(ja) * (next - fit.beta(ja));
				fit.beta(ja) = next;
			}
			moved = true;
			if (blocking < 0) {
				return true;
			}
			active.erase(active.begin() + blocking);
		}
		return moved;
	};
	auto record = [&] {
		if (opt.record_objective) {
			fit.objective.push_back(objective(fit.beta));
		}
	};

	record();
	while (fit.n_iter < opt.max_iter) {
		double max_delta = 0.0;
		for (auto j : order) {
			max_delta = std::max(max_delta, update(j));
		}
		++fit.n_iter;
		record();
		if (max_delta < opt.tol) {
			fit.converged = true;
			break;
		}
		std::vector<Eigen::Index> active;
		for (auto j : order) {
			if (fit.beta(j) != 0.0) {
				active.push_back(j);
			}
		}
		if (newton_step(active)) {
			continue;
		}
		while (fit.n_iter < opt.max_iter) {
			double inner = 0.0;
			for (auto j : active) {
				inner = std::max(inner, update(j));
			}
			++fit.n_iter;
			record();
			if (inner < opt.tol) {
				break;
			}
		}
	}
	for (Eigen::Index j = 0; j < m; ++j) {
		if (fit.beta(j) != 0.0) {
			fit.active_set.push_back(j);
		}
	}
	return fit;
}

} // namespace

void check_standardized(const Eigen::MatrixXd &X) {
	const auto n = static_cast<double>(X.rows());
	if (X.rows() == 0) {
		throw ConfigError(kModule, "empty design");
	}
	for (Eigen::Index c = 0; c < X.cols(); ++c) {
		const double mean = X.col(c).mean();
		const double var = (X.col(c).array() - mean).square().sum() / n;
		if (std::abs(mean) > 1e-8 || std::abs(var - 1.0) > 1e-6) {
			throw ConfigError(kModule, "column " + std::to_string(c) + " is not standardised (mean " +
			                               io::format_significant(mean, 3) + ", variance " +
			                               io::format_significant(var, 7) + ")");
		}
	}
}

LassoFit fit_lasso(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, double lambda, const LassoOptions &options,
                   const Eigen::VectorXd *warm_start) {
	if (y.size() != X.rows()) {
		throw ConfigError(kModule, "response length does not match design rows");
	}
	check_standardized(X);
	if (std::abs(y.mean()) > 1e-8 * (1.0 + y.cwiseAbs().maxCoeff())) {
		throw ConfigError(kModule, "response must be centred");
	}
	GramProblem p;
	p.gram = X.transpose() * X;
	p.xty = X.transpose() * y;
	p.yty = y.squaredNorm();
	p.n = X.rows();
	auto objective = [&](const Eigen::VectorXd &b) { return (y - X * b).squaredNorm() + lambda * b.lpNorm<1>(); };
	return coordinate_descent(p, lambda, options, warm_start, objective);
}

LassoFit fit_gram(const GramProblem &problem, double lambda, const LassoOptions &options,
                  const Eigen::VectorXd *warm_start) {
	auto objective = [&](const Eigen::VectorXd &b) {
		const Eigen::VectorXd gb = problem.gram * b;
		return problem.yty - 2.0 * b.dot(problem.xty) + b.dot(gb) + lambda * b.lpNorm<1>();
	};
	return coordinate_descent(problem, lambda, options, warm_start, objective);
}

double lambda_max(const Eigen::MatrixXd &X, const Eigen::VectorXd &y) {
	if (X.cols() == 0) {
		return 0.0;
	}
	return 2.0 * (X.transpose() * y).cwiseAbs().maxCoeff();
}

double lambda_max(const GramProblem &problem) {
	return problem.xty.size() == 0 ? 0.0 : 2.0 * problem.xty.cwiseAbs().maxCoeff();
}

std::vector<double> geometric_path(double lmax, int n_lambdas, double ratio) {
	if (n_lambdas < 2 || !(ratio > 0.0 && ratio < 1.0) || !(lmax >= 0.0)) {
		throw ConfigError(kModule, "path needs n_lambdas >= 2, 0 < ratio < 1 and lambda_max >= 0");
	}
	std::vector<double> path(static_cast<std::size_t>(n_lambdas));
	for (int i = 0; i < n_lambdas; ++i) {
		path[static_cast<std::size_t>(i)] = lmax * std::pow(ratio, static_cast<double>(i) / (n_lambdas - 1));
	}
	path.front() = lmax;
	path.back() = lmax * ratio;
	return path;
}

std::vector<double> lambda_path(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, int n_lambdas, double ratio) {
	return geometric_path(lambda_max(X, y), n_lambdas, ratio);
}

std::vector<LassoFit> fit_path(const GramProblem &problem, std::span<const double> path, const LassoOptions &options) {
	std::vector<LassoFit> fits;
	fits.reserve(path.size());
	for (double lambda : path) {
		fits.push_back(fit_gram(problem, lambda, options, fits.empty() ? nullptr : &fits.back().beta));
	}
	return fits;
}

PrefixMoments::PrefixMoments(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, std::vector<std::size_t> ends)
    : ends_(std::move(ends)) {
	const auto rows = static_cast<std::size_t>(X.rows());
	std::sort(ends_.begin(), ends_.end());
	ends_.erase(std::unique(ends_.begin(), ends_.end()), ends_.end());
	if (ends_.empty() || ends_.front() == 0 || ends_.back() > rows || y.size() != X.rows()) {
		throw ConfigError(kModule, "prefix ends must lie in [1, rows]");
	}
	const auto p = X.cols();
	const auto first = static_cast<Eigen::Index>(ends_.front());
	x_shift_ = X.topRows(first).colwise().mean().transpose();
	y_shift_ = y.head(first).mean();

	Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
	Snapshot running;
	running.sx = Eigen::VectorXd::Zero(p);
	running.sxy = Eigen::VectorXd::Zero(p);
	std::size_t row = 0;
	for (std::size_t end : ends_) {
		while (row < end) {
			const std::size_t nb = std::min(kChunk, end - row);
			const auto r0 = static_cast<Eigen::Index>(row);
			const auto len = static_cast<Eigen::Index>(nb);
			const Eigen::MatrixXd u = X.middleRows(r0, len).rowwise() - x_shift_.transpose();
			const Eigen::VectorXd v = y.segment(r0, len).array() - y_shift_;
			acc.selfadjointView<Eigen::Lower>().rankUpdate(u.transpose());
			running.sx += u.colwise().sum().transpose();
			running.sxy.noalias() += u.transpose() * v;
			running.sy += v.sum();
			running.syy += v.squaredNorm();
			row += nb;
		}
		running.n = end;
		Snapshot snap = running;
		snap.sxx = acc.selfadjointView<Eigen::Lower>();
		snapshots_.push_back(std::move(snap));
	}
}

const PrefixMoments::Snapshot &PrefixMoments::at(std::size_t end) const {
	const auto it = std::lower_bound(ends_.begin(), ends_.end(), end);
	if (it == ends_.end() || *it != end) {
		throw ConfigError(kModule, "no prefix moments recorded for row end " + std::to_string(end));
	}
	return snapshots_[static_cast<std::size_t>(it - ends_.begin())];
}

GramProblem PrefixMoments::problem(std::size_t end, std::span<const Eigen::Index> columns,
                                   Standardization &stats) const {
	const Snapshot &s = at(end);
	const auto q = static_cast<Eigen::Index>(columns.size());
	const auto n = static_cast<double>(s.n);
	Eigen::VectorXd mu(q);
	stats.mean.resize(q);
	stats.scale.resize(q);
	const double vbar = s.sy / n;
	stats.y_mean = y_shift_ + vbar;
	for (Eigen::Index i = 0; i < q; ++i) {
		const auto c = columns[static_cast<std::size_t>(i)];
		mu(i) = s.sx(c) / n;
		const double second = s.sxx(c, c) / n;
		const double var = second - mu(i) * mu(i);
		stats.mean(i) = x_shift_(c) + mu(i);
		stats.scale(i) = var > 1e-12 * second && var > 0.0 ? std::sqrt(var) : 0.0;
	}
	GramProblem p;
	p.n = static_cast<Eigen::Index>(s.n);
	p.gram.resize(q, q);
	p.xty.resize(q);
	for (Eigen::Index j = 0; j < q; ++j) {
		const auto cj = columns[static_cast<std::size_t>(j)];
		const double sj = stats.scale(j);
		for (Eigen::Index i = 0; i < q; ++i) {
			const double si = stats.scale(i);
			if (si == 0.0 || sj == 0.0) {
				p.gram(i, j) = i == j ? n : 0.0;
			} else {
				const auto ci = columns[static_cast<std::size_t>(i)];
				p.gram(i, j) = (s.sxx(ci, cj) - n * mu(i) * mu(j)) / (si * sj);
			}
		}
		p.xty(j) = sj == 0.0 ? 0.0 : (s.sxy(cj) - n * mu(j) * vbar) / sj;
	}
	p.yty = std::max(0.0, s.syy - n * vbar * vbar);
	return p;
}

std::vector<std::size_t> plan_ends(const cv::CvPlan &plan) {
	std::vector<std::size_t> ends;
	for (const auto &s : plan.splits) {
		ends.push_back(s.train.end);
	}
	ends.push_back(plan.selection_end());
	return ends;
}

LambdaSelection select_lambda(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, const cv::CvPlan &plan,
                              const PrefixMoments &moments, std::span<const Eigen::Index> columns,
                              const SelectionOptions &options) {
	if (columns.empty()) {
		throw ConfigError(kModule, "no columns to select from");
	}
	if (static_cast<std::size_t>(X.rows()) != plan.n_rows) {
		throw ConfigError(kModule, "plan does not match design rows");
	}
	const std::size_t n_path = plan.selection_end();
	LambdaSelection out;
	{
		Standardization stats;
		out.path = geometric_path(lambda_max(moments.problem(n_path, columns, stats)), options.n_lambdas,
		                          options.ratio);
	}
	const std::size_t n_lambda = out.path.size();
	const std::size_t n_splits = plan.splits.size();
	std::vector<std::vector<double>> split_rmse(n_splits, std::vector<double>(n_lambda));
	std::vector<std::vector<Eigen::VectorXd>> split_beta(n_splits);
	std::vector<bool> skipped(n_lambda, false);
	std::vector<double> active_sum(n_lambda, 0.0);

	for (std::size_t k = 0; k < n_splits; ++k) {
		const auto &split = plan.splits[k];
		Standardization stats;
		const GramProblem problem = moments.problem(split.train.end, columns, stats);
		const double factor = static_cast<double>(split.train.size()) / static_cast<double>(n_path);
		const auto v0 = static_cast<Eigen::Index>(split.validation.begin);
		const auto nv = static_cast<Eigen::Index>(split.validation.size());
		const Eigen::VectorXd yv = y.segment(v0, nv);
		const Eigen::VectorXd *warm = nullptr;
		split_beta[k].reserve(n_lambda);
		for (std::size_t i = 0; i < n_lambda; ++i) {
			const LassoFit fit = fit_gram(problem, out.path[i] * factor, options.lasso, warm);
			if (!fit.converged) {
				log::warn(kModule, "coordinate descent hit max_iter at lambda " + io::format_significant(fit.lambda, 4));
			}
			Eigen::VectorXd pred = Eigen::VectorXd::Constant(nv, stats.y_mean);
			for (auto j : fit.active_set) {
				const auto c = columns[static_cast<std::size_t>(j)];
				pred += (fit.beta(j) / stats.scale(j)) * (X.col(c).segment(v0, nv).array() - stats.mean(j)).matrix();
			}
			split_rmse[k][i] = linreg::rmse(yv, pred);
			active_sum[i] += static_cast<double>(fit.active_set.size());
			if (split.train.size() <= fit.active_set.size()) {
				skipped[i] = true;
			}
			split_beta[k].push_back(fit.beta);
			warm = &split_beta[k].back();
		}
	}

	out.mean_rmse.assign(n_lambda, std::numeric_limits<double>::quiet_NaN());
	out.mean_active.resize(n_lambda);
	bool any = false;
	for (std::size_t i = 0; i < n_lambda; ++i) {
		out.mean_active[i] = active_sum[i] / static_cast<double>(n_splits);
		if (skipped[i]) {
			log::warn(kModule, "lambda " + io::format_significant(out.path[i], 4) +
			                       " skipped: active set reaches the training size of a split");
			continue;
		}
		double sum = 0.0;
		for (std::size_t k = 0; k < n_splits; ++k) {
			sum += split_rmse[k][i];
		}
		out.mean_rmse[i] = sum / static_cast<double>(n_splits);
		if (!any || out.mean_rmse[i] < out.mean_rmse[out.best]) {
			out.best = i;
			any = true;
		}
	}
	if (!any) {
		throw NumericalError(kModule, "every lambda on the path was skipped");
	}
	out.lambda = out.path[out.best];
	for (std::size_t k = 0; k < n_splits; ++k) {
		std::vector<Eigen::Index> active;
		const auto &b = split_beta[k][out.best];
		for (Eigen::Index j = 0; j < b.size(); ++j) {
			if (b(j) != 0.0) {
				active.push_back(j);
			}
		}
		out.split_active.push_back(std::move(active));
	}
	out.last_split_beta = split_beta.back()[out.best];
	return out;
}

LambdaSelection select_lambda(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, const cv::CvPlan &plan,
                              const SelectionOptions &options) {
	const PrefixMoments moments(X, y, plan_ends(plan));
	std::vector<Eigen::Index> columns(static_cast<std::size_t>(X.cols()));
	std::iota(columns.begin(), columns.end(), Eigen::Index{0});
	return select_lambda(X, y, plan, moments, columns, options);
}

std::string path_csv(const LambdaSelection &s) {
	std::ostringstream out;
	out << "lambda,mean_active,mean_validation_rmse\n";
	for (std::size_t i = 0; i < s.path.size(); ++i) {
		out << io::format_double(s.path[i]) << ',' << io::format_double(s.mean_active[i]) << ',';
		if (std::isfinite(s.mean_rmse[i])) {
			out << io::format_double(s.mean_rmse[i]);
		}
		out << '\n';
	}
	return out.str();
}

} // namespace gridcast::lasso
