// Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned
// below. Exit status 0 only when every selected criterion passes.

#include "gridcast/arima.hpp"
#include "gridcast/basis.hpp"
#include "gridcast/ensemble.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/featsel.hpp"
#include "gridcast/io.hpp"
#include "gridcast/lasso.hpp"
#include "gridcast/linreg.hpp"
#include "gridcast/synth.hpp"
#include "gridcast/timeseries.hpp"

#include "oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace {

using namespace gridcast;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Tolerances and budgets.
constexpr double kOlsRelTol = 1e-8;
constexpr double kKktTol = 1e-6;
constexpr double kGridTol = 2e-3;
constexpr double kRecoveryRate = 0.90;
constexpr std::size_t kMaxSpurious = 2;
constexpr double kArTol = 0.05;
constexpr double kMaTol = 0.06;
constexpr double kSeasonalTol = 0.07;
constexpr double kLinearCoverLo = 0.93;
constexpr double kLinearCoverHi = 0.97;
constexpr double kPathCoverLo = 0.92;
constexpr double kPathCoverHi = 0.98;
constexpr double kCorrectionGain = 0.10;
constexpr double kUnityTol = 1e-10;
constexpr double kFourierTol = 1e-12;
constexpr double kTauTol = 1e-12;

constexpr double kBudget[11] = {0, 1, 1, 10, 60, 300, 120, 300, 300, 600, 5};

struct Outcome {
	bool pass = false;
	std::string detail;
};

std::string fmt(double v, int digits = 4) { return io::format_significant(v, digits); }

std::string fixed2(double v) {
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.2f", v);
	return buf;
}

std::string triple(const std::vector<double> &w) {
	return "(" + fixed2(w[0]) + ", " + fixed2(w[1]) + ", " + fixed2(w[2]) + ")";
}

// 1 ---------------------------------------------------------------------------

Outcome softmax_rows() {
	struct Case {
		const char *kind;
		std::vector<double> rmse;
		std::vector<double> published;
	};
	const Case cases[] = {{"average", {39.63, 38.97, 39.19}, {0.22, 0.43, 0.35}},
	                      {"marginal", {11.06, 8.77, 10.03}, {0.07, 0.73, 0.20}}};
	Outcome o{true, ""};
	for (const auto &c : cases) {
		const auto w = ensemble::softmax_weights(c.rmse);
		bool ok = true;
		for (std::size_t i = 0; i < 3; ++i) {
			ok = ok && fixed2(w[i]) == fixed2(c.published[i]);
		}
		o.pass = o.pass && ok;
		o.detail += std::string(o.detail.empty() ? "" : "; ") + c.kind + " " + triple(w) +
		            (ok ? " matches" : " vs published " + triple(c.published));
	}
	return o;
}

// 2 ---------------------------------------------------------------------------

Outcome horizon_plans() {
	const auto g = synth::generate([] {
		auto s = synth::default_spec();
		s.n_hours = 200;
		return s;
	}());
	struct Band {
		int lo, hi;
		ensemble::Route route;
	};
	using R = ensemble::Route;
	const std::map<ensemble::ResponseKind, std::vector<Band>> table{
	    {ensemble::ResponseKind::average, {{1, 2, R::ensemble}, {3, 6, R::corrected}, {7, 24, R::ensemble}}},
	    {ensemble::ResponseKind::marginal, {{1, 6, R::corrected}, {7, 24, R::ensemble}}}};

	Outcome o{true, ""};
	for (const auto &[kind, bands] : table) {
		std::set<int> built;
		int corrector_calls = 0;
		ensemble::CompoundOptions opt;
		opt.ensemble_factory = [&](int h) {
			built.insert(h);
			ensemble::WeightedEnsemble e;
			e.horizon = h;
			return e;
		};
		opt.corrector_factory = [&](const ensemble::WeightedEnsemble &h6) {
			corrector_calls += h6.horizon == 6 ? 1 : 100;
			return ensemble::Corrector{};
		};
		const auto f = ensemble::build_compound(g.frame, "co2", kind, opt);
		bool ok = corrector_calls == 1;
		std::set<int> expected{6};
		for (const auto &b : bands) {
			for (int h = b.lo; h <= b.hi; ++h) {
				ok = ok && f.plan.at(h) == b.route;
				if (b.route == R::ensemble) {
					expected.insert(h);
				}
			}
		}
		// Totality: each horizon resolves to its own ensemble or the corrected h6 base.
		for (int h = 1; h <= 24; ++h) {
			const int source = f.plan.at(h) == R::ensemble ? h : 6;
			ok = ok && f.ensembles.contains(source);
		}
		ok = ok && built == expected;
		o.pass = o.pass && ok;
		std::string desc;
		for (const auto &b : bands) {
			desc += (desc.empty() ? "" : "/") + std::to_string(b.lo) + "-" + std::to_string(b.hi) +
			        (b.route == R::corrected ? "c" : "e");
		}
		o.detail += std::string(o.detail.empty() ? "" : "; ") + std::string(ensemble::to_string(kind)) + " " +
		            desc + (ok ? " ok" : " MISMATCH");
	}
	return o;
}

// 3 ---------------------------------------------------------------------------

Outcome ols_oracle() {
	std::mt19937_64 rng(3003);
	std::uniform_int_distribution<int> mdist(1, 20);
	std::normal_distribution<double> z;
	double worst = 0.0;
	for (int trial = 0; trial < 200; ++trial) {
		const int m = mdist(rng);
		std::uniform_int_distribution<int> ndist(m + 3, 200);
		const int n = ndist(rng);
		Eigen::MatrixXd X(n, m + 1);
		Eigen::VectorXd y(n);
		for (int i = 0; i < n; ++i) {
			X(i, 0) = 1.0;
			for (int j = 1; j <= m; ++j) {
				// Mixed column scales exercise pivoting.
				X(i, j) = z(rng) * std::pow(10.0, (j % 5) - 2);
			}
			y(i) = z(rng) * 3.0 + X.row(i).sum();
		}
		const auto fit = linreg::fit_ols(X, y);
		const auto oracle = oracle::normal_equations(X, y);
		for (int j = 0; j <= m; ++j) {
			const auto b = static_cast<double>(oracle[static_cast<std::size_t>(j)]);
			worst = std::max(worst, std::abs(fit.beta(j) - b) / std::max(1.0, std::abs(b)));
		}
	}
	return {worst <= kOlsRelTol, "200 systems, worst relative error " + fmt(worst, 3)};
}

// 4 ---------------------------------------------------------------------------

Outcome lasso_checks() {
	std::mt19937_64 rng(4004);
	std::normal_distribution<double> z;
	double worst_kkt = 0.0;
	bool zero_ok = true;
	int unconverged = 0;
	for (int trial = 0; trial < 100; ++trial) {
		const Eigen::Index n = 80 + trial % 5 * 40;
		const Eigen::Index m = 5 + trial % 7 * 3;
		Eigen::MatrixXd X(n, m);
		Eigen::VectorXd y(n);
		for (Eigen::Index i = 0; i < n; ++i) {
			const double f = z(rng);
			for (Eigen::Index j = 0; j < m; ++j) {
				X(i, j) = 0.5 * f + z(rng);
			}
		}
		for (Eigen::Index c = 0; c < m; ++c) {
			X.col(c).array() -= X.col(c).mean();
			X.col(c) /= std::sqrt(X.col(c).squaredNorm() / static_cast<double>(n));
		}
		for (Eigen::Index i = 0; i < n; ++i) {
			y(i) = 1.5 * X(i, 0) - X(i, 1) + 0.5 * X(i, m - 1) + z(rng);
		}
		y.array() -= y.mean();

		// lambda_max oracle: the largest |gradient| at zero, computed directly.
		const double lmax = (2.0 * X.transpose() * y).cwiseAbs().maxCoeff();
		for (double f : {1.0, 1.5}) {
			zero_ok = zero_ok && lasso::fit_lasso(X, y, lmax * f).beta.isZero(0.0);
		}
		const double lambda = lmax * std::pow(10.0, -3.0 * (trial % 10) / 9.0);
		const auto fit = lasso::fit_lasso(X, y, lambda);
		unconverged += fit.converged ? 0 : 1;
		const Eigen::VectorXd grad = -2.0 * X.transpose() * (y - X * fit.beta);
		const double scale = 2.0 * static_cast<double>(n);
		for (Eigen::Index j = 0; j < m; ++j) {
			const double v = fit.beta(j) == 0.0 ? std::max(0.0, std::abs(grad(j)) - lambda)
			                                    : std::abs(grad(j) + lambda * (fit.beta(j) > 0 ? 1.0 : -1.0));
			worst_kkt = std::max(worst_kkt, v / scale);
		}
	}

	// Orthonormal design against a brute-force grid of the objective.
	double worst_grid = 0.0;
	lasso::GramProblem p;
	p.gram = Eigen::Matrix2d::Identity();
	p.xty = Eigen::Vector2d(1.7, -0.45);
	p.yty = 5.0;
	p.n = 2;
	for (double lambda : {0.0, 0.3, 1.0, 2.5, 4.0}) {
		const auto fit = lasso::fit_gram(p, lambda);
		double best = std::numeric_limits<double>::infinity();
		double b0 = 0.0, b1 = 0.0;
		for (int i = -3000; i <= 3000; ++i) {
			const double u = i * 1e-3;
			const double fu = u * u - 2.0 * u * p.xty(0) + lambda * std::abs(u);
			for (int j = -3000; j <= 3000; ++j) {
				const double v = j * 1e-3;
				const double f = fu + v * v - 2.0 * v * p.xty(1) + lambda * std::abs(v);
				if (f < best) {
					best = f;
					b0 = u;
					b1 = v;
				}
			}
		}
		worst_grid = std::max({worst_grid, std::abs(fit.beta(0) - b0), std::abs(fit.beta(1) - b1)});
	}
	const bool pass = worst_kkt <= kKktTol && worst_grid <= kGridTol && zero_ok && unconverged == 0;
	return {pass, "KKT worst " + fmt(worst_kkt, 3) + " on 100 problems, grid gap " + fmt(worst_grid, 3) +
	                  ", zero above lambda_max " + (zero_ok ? "yes" : "NO") +
	                  (unconverged > 0 ? ", unconverged " + std::to_string(unconverged) : "")};
}

// 5 ---------------------------------------------------------------------------

Outcome selection_recovery() {
	constexpr int kTrials = 50;
	constexpr Eigen::Index n = 2000;
	constexpr Eigen::Index m = 53; // 3 planted, 50 noise
	const cv::CvPlan plan = cv::make_plan(n, 8, 100, 100, 400);
	int good = 0;
	std::size_t spurious_total = 0;
	for (int trial = 0; trial < kTrials; ++trial) {
		std::mt19937_64 rng(5000 + static_cast<std::uint64_t>(trial));
		std::normal_distribution<double> z;
		Eigen::MatrixXd X(n, m);
		Eigen::VectorXd y(n);
		for (Eigen::Index i = 0; i < n; ++i) {
			for (Eigen::Index j = 0; j < m; ++j) {
				X(i, j) = z(rng);
			}
			y(i) = X(i, 0) - X(i, 1) + X(i, 2) + z(rng);
		}
		const auto rep = featsel::select_features(X, y, plan, {}, {});
		const std::set<Eigen::Index> chosen(rep.final_columns.begin(), rep.final_columns.end());
		const bool all = chosen.contains(0) && chosen.contains(1) && chosen.contains(2);
		const std::size_t spurious = chosen.size() - (chosen.contains(0) + chosen.contains(1) + chosen.contains(2));
		spurious_total += spurious;
		good += all && spurious <= kMaxSpurious ? 1 : 0;
	}
	const double rate = static_cast<double>(good) / kTrials;
	return {rate >= kRecoveryRate, std::to_string(good) + "/" + std::to_string(kTrials) +
	                                   " trials recovered all planted with <= 2 spurious (mean spurious " +
	                                   fmt(static_cast<double>(spurious_total) / kTrials, 3) + ")"};
}

// 6 ---------------------------------------------------------------------------

Outcome arima_recovery() {
	struct Case {
		const char *name;
		arima::ArimaModel truth;
		std::size_t n;
		std::uint64_t seed;
		double tol;
	};
	const Case cases[] = {
	    {"AR(1) 0.8", oracle::arma({0.8}, {}), 10000, 61, kArTol},
	    {"MA(1) 0.5", oracle::arma({}, {0.5}), 10000, 62, kMaTol},
	    {"(1,0,0)(1,0,0)_24 0.5/0.4", oracle::arma({0.5}, {}, {0.4}, {}, 24), 20000, 63, kSeasonalTol},
	};
	Outcome o{true, ""};
	for (const auto &c : cases) {
		const auto x = oracle::simulate(c.truth, c.n, c.seed);
		const auto fit = arima::fit_arima(x, c.truth.order);
		double err = 0.0;
		std::string got;
		auto cmp = [&](const std::vector<double> &a, const std::vector<double> &b) {
			for (std::size_t i = 0; i < a.size(); ++i) {
				err = std::max(err, std::abs(a[i] - b[i]));
				got += (got.empty() ? "" : "/") + fmt(a[i], 3);
			}
		};
		cmp(fit.ar, c.truth.ar);
		cmp(fit.ma, c.truth.ma);
		cmp(fit.sar, c.truth.sar);
		const bool ok = err <= c.tol;
		o.pass = o.pass && ok;
		o.detail += std::string(o.detail.empty() ? "" : "; ") + c.name + " -> " + got + (ok ? "" : " (out of tol)");
	}
	return o;
}

// 9 (and the shared model for 7, 8) -------------------------------------------

struct Pipeline {
	fs::path dir;
	bool ok = false;
	double seconds = 0.0;
	std::string error;
};

int shell(const std::string &cmd) {
	const int status = std::system(cmd.c_str());
	return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Pipeline run_pipeline(const fs::path &dir) {
	Pipeline p;
	p.dir = dir;
	fs::remove_all(dir);
	fs::create_directories(dir);
	const std::string cli = std::string("env -u GRIDCAST_SEED '") + GRIDCAST_CLI + "'";
	const std::string data = "'" + (dir / "data").string() + "'";
	const std::string model = "'" + (dir / "model").string() + "'";
	const std::string log = " 2>>'" + (dir / "log.txt").string() + "'";
	const std::string io = " --data " + data + "/data.csv --schema " + data + "/schema.json";
	const auto t0 = Clock::now();
	const std::vector<std::string> steps{
	    cli + " synth --seed 42 --out " + data + log,
	    cli + " train" + io + " --out " + model + log,
	    cli + " forecast --model " + model + io + " --out '" + (dir / "forecast.csv").string() + "'" + log,
	};
	for (const auto &s : steps) {
		if (const int code = shell(s); code != 0) {
			p.error = "exit " + std::to_string(code) + " from: " + s;
			return p;
		}
	}
	p.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
	p.ok = true;
	return p;
}

Outcome determinism(const Pipeline &a, const Pipeline &b) {
	if (!a.ok || !b.ok) {
		return {false, a.ok ? b.error : a.error};
	}
	const bool data_same = io::read_file(a.dir / "data" / "data.csv") == io::read_file(b.dir / "data" / "data.csv");
	const auto fa = io::read_file(a.dir / "forecast.csv");
	const bool same = fa == io::read_file(b.dir / "forecast.csv");
	const auto lines = std::count(fa.begin(), fa.end(), '\n');
	const double total = a.seconds + b.seconds;
	const bool pass = same && data_same && lines == 25 && total < kBudget[9];
	return {pass, std::string(same ? "forecast CSVs byte-identical" : "forecast CSVs DIFFER") +
	                  (data_same ? "" : ", data differs") + ", " + std::to_string(lines - 1) + " rows, runs " +
	                  fmt(a.seconds, 3) + " s + " + fmt(b.seconds, 3) + " s"};
}

// Held-out frame: the same generator run longer. Streams are per-driver
// sequential, so the first rows reproduce the training data exactly.
struct HeldOut {
	timeseries::TimeFrame frame;
	std::vector<std::size_t> origins;
	std::string error;
};

constexpr std::size_t kPaths = 2000;
constexpr std::size_t kPathStride = 24;

HeldOut held_out(const Pipeline &a) {
	auto spec = synth::default_spec();
	spec.seed = 42;
	const std::size_t train_hours = spec.n_hours;
	spec.n_hours = train_hours + kPaths * kPathStride;
	auto g = synth::generate(spec);
	HeldOut h{std::move(g.frame), {}, {}};
	const auto trained = timeseries::ingest_csv(a.dir / "data" / "data.csv",
	                                            timeseries::load_schema(a.dir / "data" / "schema.json"));
	const auto y0 = trained.values("co2");
	const auto y1 = h.frame.values("co2");
	for (std::size_t i = 0; i < train_hours; ++i) {
		if (y0[i] != y1[i]) {
			h.error = "extended generation does not reproduce the training rows";
			return h;
		}
	}
	for (std::size_t k = 0; k < kPaths; ++k) {
		h.origins.push_back(train_hours - 1 + k * kPathStride);
	}
	return h;
}

// 7 ---------------------------------------------------------------------------

Outcome coverage(const Pipeline &a) {
	// Linear model: a fresh fit and a fresh test point per replication, so
	// the nominal rate holds unconditionally.
	std::mt19937_64 rng(7007);
	std::normal_distribution<double> z;
	constexpr int kReps = 10000;
	constexpr int n = 60;
	int covered = 0;
	Eigen::MatrixXd X(n, 3);
	Eigen::VectorXd y(n);
	for (int r = 0; r < kReps; ++r) {
		for (int i = 0; i < n; ++i) {
			X(i, 0) = 1.0;
			X(i, 1) = z(rng);
			X(i, 2) = z(rng);
			y(i) = 1.0 + 2.0 * X(i, 1) - 0.5 * X(i, 2) + 1.5 * z(rng);
		}
		const auto fit = linreg::fit_ols(X, y);
		const Eigen::Vector3d row(1.0, z(rng), z(rng));
		const double truth = 1.0 + 2.0 * row(1) - 0.5 * row(2) + 1.5 * z(rng);
		const auto iv = linreg::prediction_interval(fit, row);
		covered += iv.lo <= truth && truth <= iv.hi ? 1 : 0;
	}
	const double linear = static_cast<double>(covered) / kReps;
	const bool linear_ok = linear >= kLinearCoverLo && linear <= kLinearCoverHi;
	std::string detail = "linear " + fmt(100.0 * linear, 4) + "% on 10000";
	if (!a.ok) {
		return {false, detail + "; compound skipped: " + a.error};
	}

	const auto h = held_out(a);
	if (!h.error.empty()) {
		return {false, detail + "; " + h.error};
	}
	const auto f = ensemble::load(a.dir / "model");
	const auto paths = ensemble::forecast_paths(f, h.frame, h.origins);
	const auto yv = h.frame.values(f.response);
	double lo = 1.0, hi = 0.0;
	int lo_h = 0, hi_h = 0;
	bool paths_ok = true;
	for (std::size_t k = 0; k < f.horizons.size(); ++k) {
		std::size_t in = 0;
		for (std::size_t i = 0; i < h.origins.size(); ++i) {
			const auto &row = paths[i][k];
			const double v = yv[h.origins[i] + static_cast<std::size_t>(row.horizon)];
			in += row.lo <= v && v <= row.hi ? 1 : 0;
		}
		const double c = static_cast<double>(in) / static_cast<double>(h.origins.size());
		paths_ok = paths_ok && c >= kPathCoverLo && c <= kPathCoverHi;
		if (c < lo) {
			lo = c;
			lo_h = f.horizons[k];
		}
		if (c > hi) {
			hi = c;
			hi_h = f.horizons[k];
		}
	}
	detail += "; compound per-horizon " + fmt(100.0 * lo, 4) + "% (h" + std::to_string(lo_h) + ") to " +
	          fmt(100.0 * hi, 4) + "% (h" + std::to_string(hi_h) + ") on " + std::to_string(h.origins.size()) +
	          " held-out paths";
	return {linear_ok && paths_ok && f.horizons.size() == 24, detail};
}

// 8 ---------------------------------------------------------------------------

Outcome correction_gain(const Pipeline &a) {
	if (!a.ok) {
		return {false, "no trained model: " + a.error};
	}
	const auto h = held_out(a);
	if (!h.error.empty()) {
		return {false, h.error};
	}
	// Every h <= 6 through the residual corrector, against the h = 6
	// ensemble forecast it corrects.
	auto f = ensemble::load(a.dir / "model");
	const int all6[] = {1, 2, 3, 4, 5, 6};
	f.plan = ensemble::horizon_plan(all6);
	f.horizons = {1, 2, 3, 4, 5, 6};
	const auto paths = ensemble::forecast_paths(f, h.frame, h.origins);
	const auto &h6 = f.ensembles.at(6);
	std::vector<std::size_t> base_origins;
	for (auto t : h.origins) {
		for (std::size_t k = 1; k <= 6; ++k) {
			base_origins.push_back(t + k - 6);
		}
	}
	const auto base = ensemble::predict(h6, h.frame, base_origins);
	const auto yv = h.frame.values(f.response);
	double sse_c = 0.0, sse_u = 0.0;
	std::array<double, 6> per_c{}, per_u{};
	for (std::size_t i = 0; i < h.origins.size(); ++i) {
		for (std::size_t k = 0; k < 6; ++k) {
			const double v = yv[h.origins[i] + k + 1];
			const double ec = v - paths[i][k].point;
			const double eu = v - base[i * 6 + k].point;
			sse_c += ec * ec;
			sse_u += eu * eu;
			per_c[k] += ec * ec;
			per_u[k] += eu * eu;
		}
	}
	const double gain = 1.0 - std::sqrt(sse_c / sse_u);
	std::string per;
	for (std::size_t k = 0; k < 6; ++k) {
		per += (k == 0 ? "" : " ") + fmt(100.0 * (1.0 - std::sqrt(per_c[k] / per_u[k])), 3);
	}
	return {gain >= kCorrectionGain, "pooled RMSE gain " + fmt(100.0 * gain, 3) + "% over h1..6 (per h: " + per +
	                                     " %) on " + std::to_string(h.origins.size()) + " held-out origins"};
}

// 10 --------------------------------------------------------------------------

Outcome basis_invariants() {
	std::mt19937_64 rng(1010);
	std::uniform_real_distribution<double> u(0.0, 1.0);
	constexpr int kPoints = 10000;

	double unity = 0.0;
	for (int i = 0; i < kPoints; ++i) {
		// A fresh knot vector every 100 points.
		static basis::KnotVector knots;
		if (i % 100 == 0) {
			const double lo = -50.0 + 100.0 * u(rng);
			const double hi = lo + 0.5 + 50.0 * u(rng);
			const int interior = i / 100 % 7;
			std::vector<double> inner;
			for (int k = 0; k < interior; ++k) {
				inner.push_back(lo + (hi - lo) * (0.02 + 0.96 * u(rng)));
			}
			std::sort(inner.begin(), inner.end());
			inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
			knots = basis::KnotVector{lo, hi, inner};
		}
		const double x = knots.lo + (knots.hi - knots.lo) * u(rng);
		const auto b = basis::bspline_basis(x, knots, static_cast<int>(knots.interior.size()) + 4);
		double s = 0.0;
		for (double v : b) {
			s += v;
		}
		unity = std::max(unity, std::abs(s - 1.0));
	}

	double circle = 0.0;
	for (int i = 0; i < kPoints; ++i) {
		const double t = 5e5 * u(rng);
		for (double period : {24.0, 168.0, 8766.0, 12.0}) {
			const auto f = basis::fourier_terms(t, 2, period);
			for (std::size_t k = 0; k + 1 < f.size(); k += 2) {
				circle = std::max(circle, std::abs(f[k] * f[k] + f[k + 1] * f[k + 1] - 1.0));
			}
		}
	}

	// Daily components repeat after 24 h; daily and weekly after 168 h.
	const std::size_t daily[] = {0, 3, 6, 7, 8};
	const std::size_t weekly[] = {1, 4, 9, 10, 11};
	std::uniform_int_distribution<timeseries::HourStamp> stamp(0, 500000);
	double tau = 0.0;
	for (int i = 0; i < kPoints; ++i) {
		const auto s = stamp(rng);
		const auto a = basis::tau_row(s);
		const auto d = basis::tau_row(s + 24);
		const auto w = basis::tau_row(s + 168);
		for (auto k : daily) {
			tau = std::max({tau, std::abs(a[k] - d[k]), std::abs(a[k] - w[k])});
		}
		for (auto k : weekly) {
			tau = std::max(tau, std::abs(a[k] - w[k]));
		}
	}
	const bool pass = unity <= kUnityTol && circle <= kFourierTol && tau <= kTauTol;
	return {pass, "partition of unity " + fmt(unity, 3) + ", sin^2+cos^2 " + fmt(circle, 3) + ", tau shift " +
	                  fmt(tau, 3) + " over 10000 points each"};
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"Acceptance gate"};
	std::vector<int> only;
	std::string work = (fs::temp_directory_path() / "gridcast_acceptance").string();
	app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
	app.add_option("--work", work, "Scratch directory for the end-to-end runs");
	CLI11_PARSE(app, argc, argv);
	const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}
	                                            : std::set<int>(only.begin(), only.end());

	const std::map<int, std::string> names{
	    {1, "softmax weights reproduce the published rows"},
	    {2, "horizon plans match the published bands"},
	    {3, "OLS matches the extended-precision oracle"},
	    {4, "LASSO KKT, soft threshold and lambda_max"},
	    {5, "feature selection recovers planted signals"},
	    {6, "ARIMA coefficient recovery"},
	    {7, "95% interval coverage"},
	    {8, "residual correction gain for h <= 6"},
	    {9, "end-to-end determinism"},
	    {10, "basis invariants"},
	};

	// 7 and 8 score the model trained by 9's first run, so that runs first.
	Pipeline a, b;
	std::map<int, std::pair<Outcome, double>> results;
	auto timed = [&](int id, const std::function<Outcome()> &fn) {
		const auto t0 = Clock::now();
		Outcome o;
		try {
			o = fn();
		} catch (const std::exception &e) {
			o = {false, std::string("threw: ") + e.what()};
		}
		const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
		if (secs > kBudget[id]) {
			o.pass = false;
			o.detail += "; over the " + fmt(kBudget[id], 3) + " s budget";
		}
		results[id] = {o, secs};
	};
	const bool need_model = selected.contains(7) || selected.contains(8) || selected.contains(9);
	if (need_model) {
		a = run_pipeline(fs::path(work) / "run_a");
	}
	if (selected.contains(9)) {
		timed(9, [&] {
			b = run_pipeline(fs::path(work) / "run_b");
			return determinism(a, b);
		});
		results[9].second += a.seconds;
	}
	const std::map<int, std::function<Outcome()>> fns{
	    {1, softmax_rows}, {2, horizon_plans},       {3, ols_oracle},
	    {4, lasso_checks}, {5, selection_recovery}, {6, arima_recovery},
	    {7, [&] { return coverage(a); }},           {8, [&] { return correction_gain(a); }},
	    {10, basis_invariants},
	};
	for (const auto &[id, fn] : fns) {
		if (selected.contains(id)) {
			timed(id, fn);
		}
	}

	bool all = true;
	for (const auto &[id, r] : results) {
		all = all && r.first.pass;
		std::printf("criterion %2d %s: %s | %s | %.1f s\n", id, names.at(id).c_str(), r.first.pass ? "PASS" : "FAIL",
		            r.first.detail.c_str(), r.second);
	}
	std::fflush(stdout);
	return all ? 0 : 1;
}
