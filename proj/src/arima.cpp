#include "gridcast/arima.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/log.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <regex>

namespace gridcast::arima {

namespace {

constexpr const char *kModule = "arima";
constexpr double kBarrier = 1e6;
constexpr double kRootMargin = 1e-6;
// An AR optimum closer than this to the unit circle is a differencing hint.
constexpr double kBoundaryMargin = 1e-3;

std::vector<double> multiply(std::span<const double> a, std::span<const double> b) {
	std::vector<double> out(a.size() + b.size() - 1, 0.0);
	for (std::size_t i = 0; i < a.size(); ++i) {
		if (a[i] == 0.0) {
			continue;
		}
		for (std::size_t j = 0; j < b.size(); ++j) {
			out[i + j] += a[i] * b[j];
		}
	}
	return out;
}

// (1-B)^d (1-B^M)^D with index 0 = 1.
std::vector<double> difference_polynomial(int d, int D, int M) {
	std::vector<double> poly{1.0};
	const std::vector<double> first{1.0, -1.0};
	std::vector<double> seasonal(static_cast<std::size_t>(M) + 1, 0.0);
	seasonal.front() = 1.0;
	seasonal.back() = -1.0;
	for (int i = 0; i < d; ++i) {
		poly = multiply(poly, first);
	}
	for (int i = 0; i < D; ++i) {
		poly = multiply(poly, seasonal);
	}
	return poly;
}

struct Lags {
	std::vector<std::size_t> lag;
	std::vector<double> coef;
};

// Nonzero entries k >= 1 of a coefficient vector.
Lags sparse(const std::vector<double> &c) {
	Lags out;
	for (std::size_t k = 1; k < c.size(); ++k) {
		if (c[k] != 0.0) {
			out.lag.push_back(k);
			out.coef.push_back(c[k]);
		}
	}
	return out;
}

struct Coefficients {
	std::vector<double> ar, ma, sar, sma;
};

Coefficients unpack(const ArimaOrder &o, std::span<const double> x) {
	Coefficients c;
	auto take = [&](std::size_t from, int n) {
		return std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(from),
		                           x.begin() + static_cast<std::ptrdiff_t>(from + static_cast<std::size_t>(n)));
	};
	std::size_t at = 0;
	c.ar = take(at, o.p);
	at += static_cast<std::size_t>(o.p);
	c.ma = take(at, o.q);
	at += static_cast<std::size_t>(o.q);
	c.sar = take(at, o.P);
	at += static_cast<std::size_t>(o.P);
	c.sma = take(at, o.Q);
	return c;
}

std::size_t condition_length(const ArimaOrder &o) {
	return static_cast<std::size_t>(o.p) + static_cast<std::size_t>(o.P) * static_cast<std::size_t>(o.M);
}

// Conditional innovations of a differenced series; zero before t0.
double css(const ArimaOrder &o, const Coefficients &c, std::span<const double> w, std::vector<double> &e) {
	const Lags ar = sparse(expand_ar(c.ar, c.sar, o.M));
	const Lags ma = sparse(expand_ma(c.ma, c.sma, o.M));
	const std::size_t t0 = condition_length(o);
	e.assign(w.size(), 0.0);
	double sum = 0.0;
	for (std::size_t t = t0; t < w.size(); ++t) {
		double v = w[t];
		for (std::size_t i = 0; i < ar.lag.size(); ++i) {
			v -= ar.coef[i] * w[t - ar.lag[i]];
		}
		for (std::size_t i = 0; i < ma.lag.size() && ma.lag[i] <= t; ++i) {
			v -= ma.coef[i] * e[t - ma.lag[i]];
		}
		e[t] = v;
		sum += v * v;
	}
	return sum;
}

bool admissible(const Coefficients &c, double margin) {
	return min_root_modulus(c.ar, -1) > 1.0 + margin && min_root_modulus(c.sar, -1) > 1.0 + margin &&
	       min_root_modulus(c.ma, 1) > 1.0 + margin && min_root_modulus(c.sma, 1) > 1.0 + margin;
}

struct Simplex {
	std::vector<double> best;
	double value = 0.0;
	int evaluations = 0;
};

template <class F>
Simplex nelder_mead(const F &f, std::vector<double> x0, double step, int max_evaluations, double tol) {
	const std::size_t n = x0.size();
	std::vector<std::vector<double>> pts(n + 1, x0);
	std::vector<double> val(n + 1);
	Simplex out;
	auto eval = [&](const std::vector<double> &x) {
		++out.evaluations;
		return f(x);
	};
	for (std::size_t i = 0; i < n; ++i) {
		pts[i + 1][i] += step;
	}
	for (std::size_t i = 0; i <= n; ++i) {
		val[i] = eval(pts[i]);
	}
	std::vector<std::size_t> idx(n + 1);
	while (out.evaluations < max_evaluations) {
		std::iota(idx.begin(), idx.end(), std::size_t{0});
		std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
		const std::size_t lo = idx.front();
		const std::size_t hi = idx.back();
		const std::size_t second = idx[n - 1];
		if (std::abs(val[hi] - val[lo]) <= tol) {
			break;
		}
		std::vector<double> centroid(n, 0.0);
		for (std::size_t i = 0; i <= n; ++i) {
			if (i != hi) {
				for (std::size_t k = 0; k < n; ++k) {
					centroid[k] += pts[i][k] / static_cast<double>(n);
				}
			}
		}
		auto along = [&](double t) {
			std::vector<double> x(n);
			for (std::size_t k = 0; k < n; ++k) {
				x[k] = centroid[k] + t * (pts[hi][k] - centroid[k]);
			}
			return x;
		};
		const auto xr = along(-1.0);
		const double fr = eval(xr);
		if (fr < val[lo]) {
			const auto xe = along(-2.0);
			const double fe = eval(xe);
			if (fe < fr) {
				pts[hi] = xe;
				val[hi] = fe;
			} else {
				pts[hi] = xr;
				val[hi] = fr;
			}
			continue;
		}
		if (fr < val[second]) {
			pts[hi] = xr;
			val[hi] = fr;
			continue;
		}
		const bool outside = fr < val[hi];
		const auto xc = along(outside ? -0.5 : 0.5);
		const double fc = eval(xc);
		if (fc < (outside ? fr : val[hi])) {
			pts[hi] = xc;
			val[hi] = fc;
			continue;
		}
		for (std::size_t i = 0; i <= n; ++i) {
			if (i != lo) {
				for (std::size_t k = 0; k < n; ++k) {
					pts[i][k] = pts[lo][k] + 0.5 * (pts[i][k] - pts[lo][k]);
				}
				val[i] = eval(pts[i]);
			}
		}
	}
	const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
	out.best = pts[best];
	out.value = val[best];
	return out;
}

void check_finite(std::span<const double> series, std::string_view what) {
	for (std::size_t i = 0; i < series.size(); ++i) {
		if (!std::isfinite(series[i])) {
			throw DataError(kModule, std::string(what) + " has a missing value at position " + std::to_string(i));
		}
	}
}

// y-level recursion coefficients: AR part times the differencing polynomial.
std::vector<double> integrated_ar(const ArimaModel &m) {
	const auto arc = expand_ar(m.ar, m.sar, m.order.M);
	std::vector<double> poly(arc.size());
	poly[0] = 1.0;
	for (std::size_t k = 1; k < arc.size(); ++k) {
		poly[k] = -arc[k];
	}
	auto full = multiply(poly, difference_polynomial(m.order.d, m.order.D, m.order.M));
	for (auto &v : full) {
		v = -v;
	}
	full[0] = 0.0;
	return full;
}

nlohmann::json numbers(const std::vector<double> &v) { return nlohmann::json(v); }

} // namespace

std::size_t ArimaOrder::n_differenced() const noexcept {
	return static_cast<std::size_t>(d) + static_cast<std::size_t>(D) * static_cast<std::size_t>(M);
}

void ArimaOrder::validate() const {
	if (p < 0 || d < 0 || q < 0 || P < 0 || D < 0 || Q < 0) {
		throw ConfigError(kModule, "orders must be non-negative in " + to_string(*this));
	}
	if (M < 1) {
		throw ConfigError(kModule, "season length must be at least 1");
	}
	if (M == 1 && P + D + Q > 0) {
		throw ConfigError(kModule, "seasonal terms need a season length above 1 in " + to_string(*this));
	}
}

std::string to_string(const ArimaOrder &o) {
	return "(" + std::to_string(o.p) + "," + std::to_string(o.d) + "," + std::to_string(o.q) + ")(" +
	       std::to_string(o.P) + "," + std::to_string(o.D) + "," + std::to_string(o.Q) + ")_" + std::to_string(o.M);
}

ArimaOrder parse_order(std::string_view text) {
	static const std::regex full(R"(\s*\((\d+),(\d+),(\d+)\)\s*(?:\((\d+),(\d+),(\d+)\)_?(\d+))?\s*)");
	std::cmatch m;
	if (!std::regex_match(text.begin(), text.end(), m, full)) {
		throw ConfigError(kModule, "cannot parse order '" + std::string(text) + "', expected (p,d,q)(P,D,Q)_M");
	}
	auto num = [&](int i) { return m[i].matched ? std::stoi(m[i].str()) : 0; };
	ArimaOrder o{num(1), num(2), num(3), num(4), num(5), num(6), m[7].matched ? num(7) : 1};
	o.validate();
	return o;
}

ArimaOrder preset(std::string_view name) {
	if (name == "average") {
		return {3, 0, 0, 0, 1, 2, 24};
	}
	if (name == "marginal") {
		return {5, 1, 0, 2, 0, 0, 24};
	}
	throw ConfigError(kModule, "unknown preset '" + std::string(name) + "' (average, marginal)");
}

double AcfReport::fraction_inside() const {
	if (values.empty()) {
		return 1.0;
	}
	const auto inside = std::count_if(values.begin(), values.end(), [&](double v) { return std::abs(v) <= band; });
	return static_cast<double>(inside) / static_cast<double>(values.size());
}

AcfReport acf(std::span<const double> x, std::size_t max_lag) {
	if (max_lag < 1 || x.size() <= max_lag) {
		throw ConfigError(kModule, "acf needs 1 <= max_lag < series length");
	}
	check_finite(x, "series");
	const auto n = static_cast<double>(x.size());
	const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
	std::vector<double> c(x.size());
	std::transform(x.begin(), x.end(), c.begin(), [&](double v) { return v - mean; });
	const double c0 = std::inner_product(c.begin(), c.end(), c.begin(), 0.0);
	if (c0 == 0.0) {
		throw DataError(kModule, "autocorrelation of a constant series is undefined");
	}
	AcfReport out;
	out.band = 1.96 / std::sqrt(n);
	for (std::size_t k = 1; k <= max_lag; ++k) {
		out.values.push_back(std::inner_product(c.begin() + static_cast<std::ptrdiff_t>(k), c.end(), c.begin(), 0.0) /
		                     c0);
	}
	return out;
}

std::vector<double> difference(std::span<const double> series, int d, int D, int M) {
	if (d < 0 || D < 0 || M < 1) {
		throw ConfigError(kModule, "differencing orders must be non-negative");
	}
	const std::size_t lost = static_cast<std::size_t>(d) + static_cast<std::size_t>(D) * static_cast<std::size_t>(M);
	if (series.size() <= lost) {
		throw ConfigError(kModule, "series of length " + std::to_string(series.size()) + " is too short for " +
		                               std::to_string(lost) + " differenced values");
	}
	std::vector<double> x(series.begin(), series.end());
	auto apply = [&](std::size_t lag) {
		std::vector<double> y(x.size() - lag);
		for (std::size_t t = lag; t < x.size(); ++t) {
			y[t - lag] = x[t] - x[t - lag];
		}
		x = std::move(y);
	};
	for (int i = 0; i < d; ++i) {
		apply(1);
	}
	for (int i = 0; i < D; ++i) {
		apply(static_cast<std::size_t>(M));
	}
	return x;
}

std::vector<double> undifference(std::span<const double> w, std::span<const double> initial, int d, int D, int M) {
	const auto delta = difference_polynomial(d, D, M);
	const std::size_t L = delta.size() - 1;
	if (initial.size() != L) {
		throw ConfigError(kModule, "undifference needs " + std::to_string(L) + " initial values");
	}
	std::vector<double> y(initial.begin(), initial.end());
	y.reserve(L + w.size());
	for (double v : w) {
		const std::size_t t = y.size();
		double acc = v;
		for (std::size_t k = 1; k <= L; ++k) {
			acc -= delta[k] * y[t - k];
		}
		y.push_back(acc);
	}
	return y;
}

std::vector<double> expand_ar(std::span<const double> ar, std::span<const double> sar, int M) {
	std::vector<double> a(ar.size() + 1);
	a[0] = 1.0;
	for (std::size_t i = 0; i < ar.size(); ++i) {
		a[i + 1] = -ar[i];
	}
	std::vector<double> s(sar.size() * static_cast<std::size_t>(M) + 1, 0.0);
	s[0] = 1.0;
	for (std::size_t j = 0; j < sar.size(); ++j) {
		s[(j + 1) * static_cast<std::size_t>(M)] = -sar[j];
	}
	auto out = multiply(a, s);
	for (auto &v : out) {
		v = -v;
	}
	out[0] = 0.0;
	return out;
}

std::vector<double> expand_ma(std::span<const double> ma, std::span<const double> sma, int M) {
	std::vector<double> a(ma.size() + 1);
	a[0] = 1.0;
	std::copy(ma.begin(), ma.end(), a.begin() + 1);
	std::vector<double> s(sma.size() * static_cast<std::size_t>(M) + 1, 0.0);
	s[0] = 1.0;
	for (std::size_t j = 0; j < sma.size(); ++j) {
		s[(j + 1) * static_cast<std::size_t>(M)] = sma[j];
	}
	return multiply(a, s);
}

double min_root_modulus(std::span<const double> c, int sign) {
	std::size_t k = c.size();
	while (k > 0 && c[k - 1] == 0.0) {
		--k;
	}
	if (k == 0) {
		return std::numeric_limits<double>::infinity();
	}
	const double s = sign < 0 ? 1.0 : -1.0;
	if (k == 1) {
		return 1.0 / std::abs(c[0]);
	}
	Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
	for (std::size_t i = 0; i < k; ++i) {
		companion(0, static_cast<Eigen::Index>(i)) = s * c[i];
	}
	for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(k); ++i) {
		companion(i, i - 1) = 1.0;
	}
	// Eigenvalues are the inverse roots.
	const Eigen::VectorXcd inv = companion.eigenvalues();
	return 1.0 / inv.cwiseAbs().maxCoeff();
}

ArimaModel fit_arima(std::span<const double> series, const ArimaOrder &order, const FitOptions &options) {
	order.validate();
	check_finite(series, "series");
	if (series.size() <= order.n_differenced()) {
		throw ConfigError(kModule, "series too short for " + to_string(order));
	}
	const std::vector<double> w = difference(series, order.d, order.D, order.M);
	const auto k = static_cast<std::size_t>(order.n_coefficients());
	const std::size_t t0 = condition_length(order);
	if (w.size() <= 10 * (k + 1) || w.size() <= t0 + 1) {
		throw ConfigError(kModule, "differenced series of length " + std::to_string(w.size()) +
		                               " is too short to fit " + to_string(order));
	}
	const auto n_eff = static_cast<double>(w.size() - t0);
	std::vector<double> e;
	auto objective = [&](const std::vector<double> &x) {
		const Coefficients c = unpack(order, x);
		const double barrier = admissible(c, kRootMargin) ? 0.0 : kBarrier;
		const double s = css(order, c, w, e);
		return std::log(std::max(s / n_eff, std::numeric_limits<double>::min())) + barrier;
	};

	std::vector<double> x(k, 0.0);
	if (k > 0) {
		Simplex run = nelder_mead(objective, x, 0.1, options.max_evaluations, options.tol);
		run = nelder_mead(objective, run.best, 0.05, options.max_evaluations, options.tol);
		x = run.best;
		if (run.value >= kBarrier / 2.0) {
			throw NumericalError(kModule, "no admissible coefficients found for " + to_string(order));
		}
	}

	ArimaModel m;
	m.order = order;
	const Coefficients c = unpack(order, x);
	m.ar = c.ar;
	m.ma = c.ma;
	m.sar = c.sar;
	m.sma = c.sma;
	const double ar_root = std::min(min_root_modulus(m.ar, -1), min_root_modulus(m.sar, -1));
	if (ar_root < 1.0 + kBoundaryMargin) {
		throw NumericalError(kModule, "the optimum of " + to_string(order) +
		                                  " sits on the stationarity boundary; increase d or D");
	}
	m.n_effective = w.size() - t0;
	m.innovation_variance = css(order, c, w, e) / n_eff;
	m.aic = n_eff * std::log(std::max(m.innovation_variance, std::numeric_limits<double>::min())) +
	        2.0 * static_cast<double>(k + 1);
	m.state = filter(m, series);
	return m;
}

std::vector<double> innovations(const ArimaModel &model, std::span<const double> series) {
	const auto w = difference(series, model.order.d, model.order.D, model.order.M);
	std::vector<double> e;
	(void)css(model.order, {model.ar, model.ma, model.sar, model.sma}, w, e);
	return e;
}

std::vector<ArimaOrder> default_candidates() {
	std::vector<ArimaOrder> out;
	for (int p = 0; p <= 2; ++p) {
		for (int q = 0; q <= 2; ++q) {
			out.push_back({p, 0, q, 0, 0, 0, 24});
		}
	}
	for (int p = 1; p <= 3; ++p) {
		for (int P = 1; P <= 2; ++P) {
			out.push_back({p, 0, 0, P, 0, 0, 24});
		}
	}
	for (int p = 1; p <= 3; ++p) {
		for (int Q = 1; Q <= 2; ++Q) {
			out.push_back({p, 0, 0, 0, 0, Q, 24});
		}
	}
	for (int p : {1, 3}) {
		for (int Q = 1; Q <= 2; ++Q) {
			out.push_back({p, 0, 0, 0, 1, Q, 24});
		}
	}
	for (int p : {1, 5}) {
		for (int P = 1; P <= 2; ++P) {
			out.push_back({p, 1, 0, P, 0, 0, 24});
		}
	}
	out.push_back({5, 0, 0, 0, 0, 0, 24});
	return out;
}

ArimaModel auto_fit(std::span<const double> series, std::span<const ArimaOrder> candidates,
                    const FitOptions &options) {
	if (candidates.empty()) {
		throw ConfigError(kModule, "no candidate orders");
	}
	std::optional<ArimaModel> best;
	for (const auto &order : candidates) {
		try {
			ArimaModel m = fit_arima(series, order, options);
			log::debug(kModule, to_string(order) + " aic " + std::to_string(m.aic));
			const double slack = 1e-9 * std::max(1.0, std::abs(m.aic));
			if (!best || m.aic < best->aic - slack ||
			    (std::abs(m.aic - best->aic) <= slack &&
			     m.order.n_coefficients() < best->order.n_coefficients())) {
				best = std::move(m);
			}
		} catch (const Error &e) {
			log::info(kModule, "candidate " + to_string(order) + " failed: " + e.what());
		}
	}
	if (!best) {
		throw NumericalError(kModule, "every candidate order failed to fit");
	}
	return *best;
}

State filter(const ArimaModel &model, std::span<const double> history) {
	check_finite(history, "residual history");
	const std::size_t need = model.order.n_differenced() + condition_length(model.order) + 1;
	if (history.size() < need) {
		throw DataError(kModule, "residual history has " + std::to_string(history.size()) + " values, " +
		                             to_string(model.order) + " needs at least " + std::to_string(need));
	}
	const auto e = innovations(model, history);
	const std::size_t ly = integrated_ar(model).size() - 1;
	const std::size_t le = expand_ma(model.ma, model.sma, model.order.M).size() - 1;
	State s;
	s.y.assign(history.end() - static_cast<std::ptrdiff_t>(ly), history.end());
	s.e.assign(le, 0.0);
	for (std::size_t i = 0; i < le && i < e.size(); ++i) {
		s.e[le - 1 - i] = e[e.size() - 1 - i];
	}
	return s;
}

std::vector<double> psi_weights(const ArimaModel &model, std::size_t n) {
	const auto c = integrated_ar(model);
	const auto th = expand_ma(model.ma, model.sma, model.order.M);
	std::vector<double> psi(n, 0.0);
	if (n == 0) {
		return psi;
	}
	psi[0] = 1.0;
	for (std::size_t j = 1; j < n; ++j) {
		double v = j < th.size() ? th[j] : 0.0;
		for (std::size_t k = 1; k < c.size() && k <= j; ++k) {
			v += c[k] * psi[j - k];
		}
		psi[j] = v;
	}
	return psi;
}

Forecast forecast(const ArimaModel &model, std::size_t h) { return forecast(model, model.state, h); }

Forecast forecast(const ArimaModel &model, const State &state, std::size_t h) {
	if (h < 1) {
		throw ConfigError(kModule, "forecast horizon must be at least 1");
	}
	const auto c = integrated_ar(model);
	const auto th = expand_ma(model.ma, model.sma, model.order.M);
	if (state.y.size() != c.size() - 1 || state.e.size() != th.size() - 1) {
		throw ConfigError(kModule, "state does not match " + to_string(model.order));
	}
	std::vector<double> y = state.y;
	std::vector<double> e = state.e;
	Forecast out;
	for (std::size_t s = 0; s < h; ++s) {
		double v = 0.0;
		for (std::size_t k = 1; k < c.size(); ++k) {
			v += c[k] * y[y.size() - k];
		}
		for (std::size_t k = 1; k < th.size(); ++k) {
			v += th[k] * e[e.size() - k];
		}
		out.mean.push_back(v);
		y.push_back(v);
		e.push_back(0.0);
	}
	const auto psi = psi_weights(model, h);
	double acc = 0.0;
	for (double p : psi) {
		acc += p * p;
		out.variance.push_back(model.innovation_variance * acc);
	}
	return out;
}

Corrected corrected_forecast(double base, double base_mean_variance, const ArimaModel &model,
                             std::span<const double> residual_history, std::size_t h, double level) {
	if (residual_history.empty()) {
		throw DataError(kModule, "missing residual history");
	}
	if (!(level > 0.0 && level < 1.0)) {
		throw ConfigError(kModule, "interval level must lie in (0, 1)");
	}
	const Forecast f = forecast(model, filter(model, residual_history), h);
	Corrected out;
	out.correction = f.mean[h - 1];
	out.point = base + out.correction;
	out.variance = base_mean_variance + f.variance[h - 1];
	const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
	const double half = z * std::sqrt(out.variance);
	out.lo = out.point - half;
	out.hi = out.point + half;
	return out;
}

nlohmann::json to_json(const ArimaModel &m) {
	return {{"order", to_string(m.order)},
	        {"ar", numbers(m.ar)},
	        {"ma", numbers(m.ma)},
	        {"sar", numbers(m.sar)},
	        {"sma", numbers(m.sma)},
	        {"innovation_variance", m.innovation_variance},
	        {"n_effective", m.n_effective},
	        {"aic", m.aic},
	        {"state", {{"y", numbers(m.state.y)}, {"e", numbers(m.state.e)}}}};
}

ArimaModel model_from_json(const nlohmann::json &j) {
	try {
		ArimaModel m;
		m.order = parse_order(j.at("order").get<std::string>());
		m.ar = j.at("ar").get<std::vector<double>>();
		m.ma = j.at("ma").get<std::vector<double>>();
		m.sar = j.at("sar").get<std::vector<double>>();
		m.sma = j.at("sma").get<std::vector<double>>();
		m.innovation_variance = j.at("innovation_variance").get<double>();
		m.n_effective = j.at("n_effective").get<std::size_t>();
		m.aic = j.at("aic").get<double>();
		m.state.y = j.at("state").at("y").get<std::vector<double>>();
		m.state.e = j.at("state").at("e").get<std::vector<double>>();
		if (m.ar.size() != static_cast<std::size_t>(m.order.p) || m.ma.size() != static_cast<std::size_t>(m.order.q) ||
		    m.sar.size() != static_cast<std::size_t>(m.order.P) || m.sma.size() != static_cast<std::size_t>(m.order.Q)) {
			throw ConfigError(kModule, "coefficient counts do not match " + to_string(m.order));
		}
		return m;
	} catch (const nlohmann::json::exception &e) {
		throw ConfigError(kModule, std::string("malformed ARIMA model: ") + e.what());
	}
}

} // namespace gridcast::arima
