#include "gridcast/errors.hpp"
#include "gridcast/lasso.hpp"
#include "gridcast/linreg.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace gridcast;
using namespace gridcast::lasso;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::MatrixXd standardize(Eigen::MatrixXd X) {
	for (Eigen::Index c = 0; c < X.cols(); ++c) {
		X.col(c).array() -= X.col(c).mean();
		X.col(c) /= std::sqrt(X.col(c).squaredNorm() / static_cast<double>(X.rows()));
	}
	return X;
}

Eigen::VectorXd centre(Eigen::VectorXd y) {
	y.array() -= y.mean();
	return y;
}

struct Problem {
	Eigen::MatrixXd X;
	Eigen::VectorXd y;
};

// Correlated columns through a shared factor, sparse truth.
Problem random_problem(std::mt19937_64 &rng, Eigen::Index n, Eigen::Index m) {
	std::normal_distribution<double> z(0.0, 1.0);
	Eigen::MatrixXd X(n, m);
	Eigen::VectorXd y(n);
	for (Eigen::Index i = 0; i < n; ++i) {
		const double f = z(rng);
		for (Eigen::Index j = 0; j < m; ++j) {
			X(i, j) = 0.5 * f + z(rng);
		}
	}
	X = standardize(X);
	for (Eigen::Index i = 0; i < n; ++i) {
		y(i) = 2.0 * X(i, 0) - 1.5 * X(i, 1) + 0.5 * X(i, m - 1) + z(rng);
	}
	return {X, centre(y)};
}

double objective(const Problem &p, const Eigen::VectorXd &b, double lambda) {
	return (p.y - p.X * b).squaredNorm() + lambda * b.lpNorm<1>();
}

Problem planted(std::mt19937_64 &rng, Eigen::Index n, Eigen::Index noise, double amplitude) {
	std::normal_distribution<double> z(0.0, 1.0);
	Eigen::MatrixXd X(n, noise + 3);
	Eigen::VectorXd y(n);
	for (Eigen::Index i = 0; i < n; ++i) {
		for (Eigen::Index j = 0; j < X.cols(); ++j) {
			X(i, j) = z(rng);
		}
		y(i) = amplitude * (X(i, 0) - X(i, 1) + X(i, 2)) + z(rng);
	}
	return {X, y};
}

} // namespace

TEST_CASE("penalty at lambda_max zeroes every coefficient", "[lasso]") {
	std::mt19937_64 rng(1);
	const Problem p = random_problem(rng, 100, 8);
	const double lmax = lambda_max(p.X, p.y);
	CHECK_THAT(lmax, WithinRel(2.0 * (p.X.transpose() * p.y).cwiseAbs().maxCoeff(), 1e-15));
	for (double f : {1.0, 1.5, 100.0}) {
		const LassoFit fit = fit_lasso(p.X, p.y, f * lmax);
		CHECK(fit.beta.isZero(0.0));
		CHECK(fit.active_set.empty());
	}
}

TEST_CASE("single feature without penalty is the OLS slope", "[lasso]") {
	std::mt19937_64 rng(2);
	std::normal_distribution<double> z(0.0, 1.0);
	Eigen::MatrixXd X(60, 1);
	Eigen::VectorXd y(60);
	for (Eigen::Index i = 0; i < 60; ++i) {
		X(i, 0) = z(rng);
		y(i) = 0.8 * X(i, 0) + z(rng);
	}
	X = standardize(X);
	y = centre(y);
	const LassoFit fit = fit_lasso(X, y, 0.0);
	CHECK_THAT(fit.beta(0), WithinAbs(X.col(0).dot(y) / X.col(0).squaredNorm(), 1e-6));
}

TEST_CASE("zero penalty reproduces OLS on a full-rank design", "[lasso]") {
	std::mt19937_64 rng(3);
	const Problem p = random_problem(rng, 200, 6);
	const LassoFit fit = fit_lasso(p.X, p.y, 0.0);
	const Eigen::VectorXd ols = p.X.colPivHouseholderQr().solve(p.y);
	CHECK((fit.beta - ols).cwiseAbs().maxCoeff() <= 1e-6);
	CHECK(fit.converged);
}

TEST_CASE("orthonormal design matches the soft threshold and a grid-search oracle", "[lasso]") {
	// Unit-norm orthogonal columns: X'X = I.
	GramProblem p;
	p.gram = Eigen::Matrix2d::Identity();
	p.xty = Eigen::Vector2d(2.3, -0.7);
	p.yty = 10.0;
	p.n = 4;
	for (double lambda : {0.0, 0.5, 1.0, 2.0, 5.0}) {
		const LassoFit fit = fit_gram(p, lambda);
		auto soft = [&](double b) { return std::copysign(std::max(std::abs(b) - lambda / 2.0, 0.0), b); };
		CHECK_THAT(fit.beta(0), WithinAbs(soft(2.3), 1e-12));
		CHECK_THAT(fit.beta(1), WithinAbs(soft(-0.7), 1e-12));

		double best = std::numeric_limits<double>::infinity();
		double b0 = 0.0;
		double b1 = 0.0;
		for (int i = -5000; i <= 5000; ++i) {
			const double u = i * 1e-3;
			const double fu = u * u - 2.0 * u * p.xty(0) + lambda * std::abs(u);
			for (int j = -5000; j <= 5000; ++j) {
				const double v = j * 1e-3;
				const double f = fu + v * v - 2.0 * v * p.xty(1) + lambda * std::abs(v);
				if (f < best) {
					best = f;
					b0 = u;
					b1 = v;
				}
			}
		}
		CHECK_THAT(fit.beta(0), WithinAbs(b0, 2e-3));
		CHECK_THAT(fit.beta(1), WithinAbs(b1, 2e-3));
	}
}

TEST_CASE("standardised orthogonal design thresholds at lambda / 2n", "[lasso]") {
	Eigen::MatrixXd X(4, 2);
	X << 1, 1, 1, -1, -1, 1, -1, -1;
	const Eigen::VectorXd y = centre(Eigen::Vector4d(3.0, 1.0, -0.5, -2.0));
	const Eigen::VectorXd ols = X.transpose() * y / 4.0;
	for (double lambda : {0.0, 1.0, 4.0, 9.0}) {
		const LassoFit fit = fit_lasso(X, y, lambda);
		for (Eigen::Index j = 0; j < 2; ++j) {
			const double expect = std::copysign(std::max(std::abs(ols(j)) - lambda / 8.0, 0.0), ols(j));
			CHECK_THAT(fit.beta(j), WithinAbs(expect, 1e-12));
		}
	}
}

TEST_CASE("non-standardised inputs are rejected", "[lasso]") {
	Eigen::MatrixXd X(4, 1);
	X << 1, 2, 3, 4;
	const Eigen::VectorXd y = centre(Eigen::Vector4d(1, 0, 0, 2));
	CHECK_THROWS_WITH(fit_lasso(X, y, 1.0), ContainsSubstring("not standardised"));
	const Eigen::MatrixXd Xs = standardize(X);
	CHECK_THROWS_WITH(fit_lasso(Xs, Eigen::Vector4d(1, 1, 1, 2), 1.0), ContainsSubstring("centred"));
}

TEST_CASE("max_iter exhaustion returns an unconverged fit", "[lasso]") {
	std::mt19937_64 rng(4);
	const Problem p = random_problem(rng, 80, 10);
	LassoOptions opt;
	opt.max_iter = 1;
	opt.tol = 1e-14;
	const LassoFit fit = fit_lasso(p.X, p.y, 1.0, opt);
	CHECK_FALSE(fit.converged);
	CHECK(fit.n_iter == 1);
	CHECK(fit.beta.size() == 10);
}

TEST_CASE("geometric path examples", "[lasso]") {
	const auto path = geometric_path(8.0, 3, 0.01);
	REQUIRE(path.size() == 3);
	CHECK(path[0] == 8.0);
	CHECK_THAT(path[1], WithinRel(0.8, 1e-14));
	CHECK_THAT(path[2], WithinRel(0.08, 1e-14));
	CHECK_THROWS_AS(geometric_path(1.0, 1, 0.1), ConfigError);
	CHECK_THROWS_AS(geometric_path(1.0, 5, 1.0), ConfigError);

	std::mt19937_64 rng(5);
	const Problem p = random_problem(rng, 120, 5);
	const auto lp = lambda_path(p.X, p.y, 3, 0.01);
	CHECK(lp[0] == lambda_max(p.X, p.y));
	GramProblem g{p.X.transpose() * p.X, p.X.transpose() * p.y, p.y.squaredNorm(), p.X.rows()};
	const auto fits = fit_path(g, lp);
	CHECK(fits.front().active_set.empty());
}

TEST_CASE("active set grows along the path on random data", "[lasso]") {
	std::mt19937_64 rng(6);
	int steps = 0;
	int monotone = 0;
	for (int trial = 0; trial < 20; ++trial) {
		const Problem p = random_problem(rng, 150, 20);
		GramProblem g{p.X.transpose() * p.X, p.X.transpose() * p.y, p.y.squaredNorm(), p.X.rows()};
		const auto fits = fit_path(g, lambda_path(p.X, p.y, 30, 1e-3));
		for (std::size_t i = 1; i < fits.size(); ++i) {
			++steps;
			monotone += fits[i].active_set.size() >= fits[i - 1].active_set.size() ? 1 : 0;
		}
	}
	CHECK(static_cast<double>(monotone) >= 0.9 * steps);
}

TEST_CASE("objective never increases across sweeps", "[lasso][property]") {
	std::mt19937_64 rng(7);
	LassoOptions opt;
	opt.record_objective = true;
	for (int trial = 0; trial < 20; ++trial) {
		const Problem p = random_problem(rng, 100, 15);
		const double lambda = lambda_max(p.X, p.y) * std::pow(10.0, -3.0 * trial / 19.0);
		const LassoFit fit = fit_lasso(p.X, p.y, lambda, opt);
		REQUIRE(fit.objective.size() == static_cast<std::size_t>(fit.n_iter) + 1);
		CHECK(fit.objective.front() <= objective(p, Eigen::VectorXd::Zero(15), lambda) + 1e-12);
		for (std::size_t i = 1; i < fit.objective.size(); ++i) {
			CHECK(fit.objective[i] <= fit.objective[i - 1] + 1e-12);
		}
	}
}

TEST_CASE("KKT conditions hold at convergence", "[lasso][property]") {
	std::mt19937_64 rng(8);
	const double tol = 1e-7;
	for (int trial = 0; trial < 30; ++trial) {
		const Problem p = random_problem(rng, 120, 12);
		const double lambda = lambda_max(p.X, p.y) * std::pow(10.0, -2.5 * (trial % 10) / 9.0);
		const LassoFit fit = fit_lasso(p.X, p.y, lambda);
		REQUIRE(fit.converged);
		const Eigen::VectorXd grad = -2.0 * p.X.transpose() * (p.y - p.X * fit.beta);
		const double scale = 2.0 * static_cast<double>(p.X.rows());
		for (Eigen::Index j = 0; j < 12; ++j) {
			if (fit.beta(j) == 0.0) {
				CHECK(std::abs(grad(j)) <= lambda + tol * scale);
			} else {
				CHECK(std::abs(grad(j) + lambda * (fit.beta(j) > 0 ? 1.0 : -1.0)) <= tol * scale);
			}
		}
		std::vector<Eigen::Index> nz;
		for (Eigen::Index j = 0; j < 12; ++j) {
			if (fit.beta(j) != 0.0) {
				nz.push_back(j);
			}
		}
		CHECK(nz == fit.active_set);
	}
}

TEST_CASE("visit order does not change the solution", "[lasso][property]") {
	GramProblem ortho;
	ortho.gram = Eigen::MatrixXd::Identity(4, 4) * 10.0;
	ortho.xty = Eigen::Vector4d(12.0, -3.0, 0.5, 7.0);
	ortho.yty = 100.0;
	ortho.n = 10;
	LassoOptions reversed;
	reversed.order = {3, 2, 1, 0};
	CHECK(fit_gram(ortho, 4.0).beta == fit_gram(ortho, 4.0, reversed).beta);

	std::mt19937_64 rng(9);
	for (int trial = 0; trial < 10; ++trial) {
		const Problem p = random_problem(rng, 100, 10);
		const double lambda = 0.05 * lambda_max(p.X, p.y);
		LassoOptions shuffled;
		shuffled.order.resize(10);
		std::iota(shuffled.order.begin(), shuffled.order.end(), Eigen::Index{0});
		std::shuffle(shuffled.order.begin(), shuffled.order.end(), rng);
		const double a = objective(p, fit_lasso(p.X, p.y, lambda).beta, lambda);
		const double b = objective(p, fit_lasso(p.X, p.y, lambda, shuffled).beta, lambda);
		CHECK_THAT(a, WithinRel(b, 1e-8));
	}
}

TEST_CASE("prefix moments reproduce directly standardised problems", "[lasso]") {
	std::mt19937_64 rng(10);
	std::normal_distribution<double> z(0.0, 1.0);
	Eigen::MatrixXd X(700, 4);
	Eigen::VectorXd y(700);
	for (Eigen::Index i = 0; i < 700; ++i) {
		X(i, 0) = 1000.0 + z(rng);
		X(i, 1) = z(rng) * 1e-3;
		X(i, 2) = 5.0;
		X(i, 3) = X(i, 0) * 0.5 + z(rng);
		y(i) = 50.0 + X(i, 3) + z(rng);
	}
	const PrefixMoments moments(X, y, {300, 700});
	const std::vector<Eigen::Index> cols{3, 0, 1, 2};
	Standardization stats;
	const GramProblem g = moments.problem(300, cols, stats);
	CHECK(stats.scale(3) == 0.0);
	CHECK(g.gram(3, 3) == 300.0);
	CHECK(g.xty(3) == 0.0);
	Eigen::MatrixXd Xs(300, 3);
	for (Eigen::Index j = 0; j < 3; ++j) {
		Xs.col(j) = X.col(cols[static_cast<std::size_t>(j)]).head(300);
	}
	Xs = standardize(Xs);
	const Eigen::VectorXd ys = centre(y.head(300));
	const Eigen::MatrixXd gram = Xs.transpose() * Xs;
	const Eigen::VectorXd xty = Xs.transpose() * ys;
	CHECK((g.gram.topLeftCorner(3, 3) - gram).cwiseAbs().maxCoeff() <= 1e-8 * 300.0);
	CHECK((g.xty.head(3) - xty).cwiseAbs().maxCoeff() <= 1e-8 * 300.0);
	CHECK_THAT(g.yty, WithinRel(ys.squaredNorm(), 1e-10));
	CHECK_THAT(stats.y_mean, WithinRel(y.head(300).mean(), 1e-12));
	CHECK_THROWS_AS(moments.at(500), ConfigError);
}

TEST_CASE("noise response selects a near-empty model at the noise floor", "[lasso]") {
	std::mt19937_64 rng(11);
	std::normal_distribution<double> z(0.0, 1.0);
	int near_head = 0;
	for (int trial = 0; trial < 10; ++trial) {
		Eigen::MatrixXd X(2000, 20);
		Eigen::VectorXd y(2000);
		for (Eigen::Index i = 0; i < 2000; ++i) {
			for (Eigen::Index j = 0; j < 20; ++j) {
				X(i, j) = z(rng);
			}
			y(i) = 3.0 * z(rng);
		}
		const cv::CvPlan plan = cv::default_plan(2000, 8, 100, 100);
		const LambdaSelection sel = select_lambda(X, y, plan);
		CHECK(std::abs(sel.mean_rmse[sel.best] - 3.0) <= 0.05 * 3.0);
		near_head += sel.best <= 10 ? 1 : 0;
	}
	CHECK(near_head >= 9);
}

TEST_CASE("planted signal stays active at the selected lambda", "[lasso]") {
	std::mt19937_64 rng(12);
	int hits = 0;
	constexpr int kTrials = 20;
	for (int trial = 0; trial < kTrials; ++trial) {
		const Problem p = planted(rng, 2000, 50, 1.0);
		const cv::CvPlan plan = cv::make_plan(2000, 8, 100, 100, 400);
		const LambdaSelection sel = select_lambda(p.X, p.y, plan);
		hits += (sel.last_split_beta(0) != 0.0 && sel.last_split_beta(1) != 0.0 && sel.last_split_beta(2) != 0.0)
		            ? 1
		            : 0;
	}
	CHECK(hits >= 19);
}

TEST_CASE("ties go to the larger lambda", "[lasso][property]") {
	std::mt19937_64 rng(13);
	for (int trial = 0; trial < 5; ++trial) {
		const Problem p = planted(rng, 600, 10, 0.05);
		SelectionOptions opt;
		opt.n_lambdas = 40;
		const LambdaSelection sel = select_lambda(p.X, p.y, cv::make_plan(600, 4, 50, 50, 200), opt);
		for (std::size_t i = 0; i < sel.path.size(); ++i) {
			if (std::isnan(sel.mean_rmse[i])) {
				continue;
			}
			if (i < sel.best) {
				CHECK(sel.mean_rmse[i] > sel.mean_rmse[sel.best]);
			} else {
				CHECK(sel.mean_rmse[i] >= sel.mean_rmse[sel.best]);
			}
		}
		CHECK(sel.lambda == sel.path[sel.best]);
	}
	// A weak signal leaves the head of the path empty in every split, so
	// the first lambdas tie exactly and the head must win among them.
	const Problem p = planted(rng, 600, 10, 0.0);
	SelectionOptions opt;
	opt.n_lambdas = 40;
	opt.ratio = 0.5;
	const LambdaSelection sel = select_lambda(p.X, p.y, cv::make_plan(600, 4, 50, 50, 200), opt);
	if (sel.mean_rmse[0] == sel.mean_rmse[1]) {
		CHECK(sel.best != 1);
	}
	const std::string csv = path_csv(sel);
	CHECK(csv.rfind("lambda,mean_active,mean_validation_rmse\n", 0) == 0);
	CHECK(std::count(csv.begin(), csv.end(), '\n') == 41);
}
