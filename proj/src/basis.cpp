#include "gridcast/basis.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/log.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace gridcast::basis {

namespace {
constexpr int kDegree = 3;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

std::vector<double> fourier_terms(double t, int n_order, double period) {
	if (n_order < 1 || !(period > 0.0)) {
		throw ConfigError("basis", "fourier_terms needs n_order >= 1 and period > 0");
	}
	std::vector<double> out;
	out.reserve(2 * static_cast<std::size_t>(n_order));
	for (int i = 1; i <= n_order; ++i) {
		// Reduce before scaling so that t and t + period give identical terms.
		double phase = std::fmod(static_cast<double>(i) * t, period);
		if (phase < 0.0) {
			phase += period;
		}
		const double angle = kTwoPi * phase / period;
		out.push_back(std::sin(angle));
		out.push_back(std::cos(angle));
	}
	return out;
}

void KnotVector::validate() const {
	if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
		throw ConfigError("basis", "degenerate knot vector: lo must be below hi");
	}
	double prev = lo;
	for (double k : interior) {
		if (!(k > prev) || !(k < hi)) {
			throw ConfigError("basis", "interior knots must be strictly ascending inside (lo, hi)");
		}
		prev = k;
	}
}

double quantile_type7(std::vector<double> sorted_values, double p) {
	if (sorted_values.empty()) {
		throw DataError("basis", "quantile of an empty sample");
	}
	const double h = static_cast<double>(sorted_values.size() - 1) * p;
	const auto lo = static_cast<std::size_t>(std::floor(h));
	const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
	return sorted_values[lo] + (h - static_cast<double>(lo)) * (sorted_values[hi] - sorted_values[lo]);
}

KnotVector quantile_knots(std::span<const double> values, int n_interior) {
	if (n_interior < 0) {
		throw ConfigError("basis", "negative interior knot count");
	}
	std::vector<double> sorted;
	sorted.reserve(values.size());
	for (double v : values) {
		if (!timeseries::is_missing(v)) {
			sorted.push_back(v);
		}
	}
	std::sort(sorted.begin(), sorted.end());
	if (sorted.empty() || sorted.front() == sorted.back()) {
		throw DataError("basis", "knots need at least two distinct values");
	}
	KnotVector knots{sorted.front(), sorted.back(), {}};
	for (int k = 1; k <= n_interior; ++k) {
		const double q = quantile_type7(sorted, static_cast<double>(k) / (n_interior + 1));
		if (q > knots.lo && q < knots.hi && (knots.interior.empty() || q > knots.interior.back())) {
			knots.interior.push_back(q);
		}
	}
	return knots;
}

BSplineBasis::BSplineBasis(KnotVector knots) : knots_(std::move(knots)) {
	knots_.validate();
	sequence_.assign(kDegree + 1, knots_.lo);
	sequence_.insert(sequence_.end(), knots_.interior.begin(), knots_.interior.end());
	sequence_.insert(sequence_.end(), kDegree + 1, knots_.hi);
}

std::size_t BSplineBasis::span_index(double x) const {
	const std::size_t last = size() - 1;
	if (x >= knots_.hi) {
		return last;
	}
	auto it = std::upper_bound(sequence_.begin() + kDegree, sequence_.begin() + static_cast<long>(last) + 1, x);
	return static_cast<std::size_t>(it - sequence_.begin()) - 1;
}

void BSplineBasis::evaluate(double x, std::span<double> out) const {
	x = std::clamp(x, knots_.lo, knots_.hi);
	std::fill(out.begin(), out.end(), 0.0);
	const std::size_t span = span_index(x);
	const auto &u = sequence_;
	// Cox-de Boor triangle for the degree+1 non-zero functions.
	std::array<double, kDegree + 1> n{1.0, 0.0, 0.0, 0.0};
	std::array<double, kDegree + 1> left{}, right{};
	for (int j = 1; j <= kDegree; ++j) {
		left[j] = x - u[span + 1 - j];
		right[j] = u[span + j] - x;
		double saved = 0.0;
		for (int r = 0; r < j; ++r) {
			const double temp = n[r] / (right[r + 1] + left[j - r]);
			n[r] = saved + right[r + 1] * temp;
			saved = left[j - r] * temp;
		}
		n[j] = saved;
	}
	for (int j = 0; j <= kDegree; ++j) {
		out[span - kDegree + j] = n[j];
	}
}

std::vector<double> BSplineBasis::operator()(double x) const {
	std::vector<double> out(size());
	evaluate(x, out);
	return out;
}

Eigen::MatrixXd BSplineBasis::derivatives(double x) const {
	constexpr int p = kDegree;
	constexpr int nd = 2;
	const std::size_t span = span_index(std::clamp(x, knots_.lo, knots_.hi));
	const auto &u = sequence_;
	double ndu[p + 1][p + 1];
	double left[p + 1];
	double right[p + 1];
	ndu[0][0] = 1.0;
	for (int j = 1; j <= p; ++j) {
		left[j] = x - u[span + 1 - j];
		right[j] = u[span + j] - x;
		double saved = 0.0;
		for (int r = 0; r < j; ++r) {
			ndu[j][r] = right[r + 1] + left[j - r];
			const double temp = ndu[r][j - 1] / ndu[j][r];
			ndu[r][j] = saved + right[r + 1] * temp;
			saved = left[j - r] * temp;
		}
		ndu[j][j] = saved;
	}
	double ders[nd + 1][p + 1];
	for (int j = 0; j <= p; ++j) {
		ders[0][j] = ndu[j][p];
	}
	double a[2][p + 1];
	for (int r = 0; r <= p; ++r) {
		int s1 = 0;
		int s2 = 1;
		a[0][0] = 1.0;
		for (int k = 1; k <= nd; ++k) {
			double d = 0.0;
			const int rk = r - k;
			const int pk = p - k;
			if (r >= k) {
				a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
				d = a[s2][0] * ndu[rk][pk];
			}
			const int j1 = rk >= -1 ? 1 : -rk;
			const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
			for (int j = j1; j <= j2; ++j) {
				a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
				d += a[s2][j] * ndu[rk + j][pk];
			}
			if (r <= pk) {
				a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
				d += a[s2][k] * ndu[r][pk];
			}
			ders[k][r] = d;
			std::swap(s1, s2);
		}
	}
	int factor = p;
	for (int k = 1; k <= nd; ++k) {
		for (int j = 0; j <= p; ++j) {
			ders[k][j] *= factor;
		}
		factor *= p - k;
	}
	Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nd + 1, static_cast<Eigen::Index>(size()));
	for (int k = 0; k <= nd; ++k) {
		for (int j = 0; j <= p; ++j) {
			out(k, static_cast<Eigen::Index>(span) - p + j) = ders[k][j];
		}
	}
	return out;
}

NaturalSplineBasis::NaturalSplineBasis(KnotVector knots) : bspline_(std::move(knots)) {
	const auto k = static_cast<Eigen::Index>(bspline_.size());
	const Eigen::MatrixXd d_lo = bspline_.derivatives(bspline_.knots().lo);
	const Eigen::MatrixXd d_hi = bspline_.derivatives(bspline_.knots().hi);
	// Second-derivative constraints, intercept column removed.
	Eigen::MatrixXd constraint(k - 1, 2);
	constraint.col(0) = d_lo.row(2).tail(k - 1).transpose();
	constraint.col(1) = d_hi.row(2).tail(k - 1).transpose();
	const Eigen::HouseholderQR<Eigen::MatrixXd> qr(constraint);
	const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k - 1, k - 1);
	projection_ = q.rightCols(k - 3);
	value_lo_ = projection_.transpose() * d_lo.row(0).tail(k - 1).transpose();
	slope_lo_ = projection_.transpose() * d_lo.row(1).tail(k - 1).transpose();
	value_hi_ = projection_.transpose() * d_hi.row(0).tail(k - 1).transpose();
	slope_hi_ = projection_.transpose() * d_hi.row(1).tail(k - 1).transpose();
}

Eigen::VectorXd NaturalSplineBasis::inside(double x) const {
	const auto k = static_cast<Eigen::Index>(bspline_.size());
	Eigen::VectorXd b(k);
	bspline_.evaluate(x, std::span<double>(b.data(), static_cast<std::size_t>(k)));
	return projection_.transpose() * b.tail(k - 1);
}

void NaturalSplineBasis::evaluate(double x, std::span<double> out) const {
	const auto &kv = bspline_.knots();
	Eigen::VectorXd v;
	if (x < kv.lo) {
		v = value_lo_ + (x - kv.lo) * slope_lo_;
	} else if (x > kv.hi) {
		v = value_hi_ + (x - kv.hi) * slope_hi_;
	} else {
		v = inside(x);
	}
	std::copy(v.data(), v.data() + v.size(), out.begin());
}

std::vector<double> NaturalSplineBasis::operator()(double x) const {
	std::vector<double> out(size());
	evaluate(x, out);
	return out;
}

std::vector<double> bspline_basis(double x, const KnotVector &knots, int count) {
	if (count != static_cast<int>(knots.interior.size()) + 4) {
		throw ConfigError("basis", "bspline count must equal interior knots + 4");
	}
	return BSplineBasis(knots)(x);
}

std::vector<double> natural_spline_basis(double x, const KnotVector &knots, int count) {
	if (count != static_cast<int>(knots.interior.size()) + 1) {
		throw ConfigError("basis", "natural spline count must equal interior knots + 1");
	}
	return NaturalSplineBasis(knots)(x);
}

const std::array<std::string, kTauWidth> &tau_names() {
	static const std::array<std::string, kTauWidth> names{
	    "hour",       "weekday",    "month",      "sin_hour",      "sin_weekday",
	    "sin_month",  "hour_s2",    "hour_s3",    "hour_s4",       "weekday_s2",
	    "weekday_s3", "weekday_s4", "month_s2",   "month_s3",      "month_s4"};
	return names;
}

double periodic_spline(double x, double period, int count, int k) {
	const double spacing = period / count;
	const double centre = spacing * (k - 0.5);
	double d = std::fmod(x - centre, period);
	if (d < -period / 2) {
		d += period;
	} else if (d >= period / 2) {
		d -= period;
	}
	const double u = std::abs(d / spacing);
	if (u >= 2.0) {
		return 0.0;
	}
	if (u >= 1.0) {
		const double w = 2.0 - u;
		return w * w * w / 6.0;
	}
	return (4.0 - 6.0 * u * u + 3.0 * u * u * u) / 6.0;
}

std::array<double, kTauWidth> tau_row(const timeseries::CalendarFields &cal) {
	const double hour = cal.hour;
	const double weekday = cal.weekday;
	const double month = cal.month;
	std::array<double, kTauWidth> row{};
	row[0] = hour;
	row[1] = weekday;
	row[2] = month;
	row[3] = std::sin(kTwoPi * hour / 24.0);
	row[4] = std::sin(kTwoPi * weekday / 7.0);
	row[5] = std::sin(kTwoPi * month / 12.0);
	const std::array<std::pair<double, double>, 3> clocks{{{hour, 24.0}, {weekday, 7.0}, {month, 12.0}}};
	std::size_t at = 6;
	for (const auto &[x, period] : clocks) {
		for (int k = 2; k <= 4; ++k) {
			row[at++] = periodic_spline(x, period, 5, k);
		}
	}
	return row;
}

std::array<double, kTauWidth> tau_row(timeseries::HourStamp stamp) { return tau_row(timeseries::calendar(stamp)); }

Columns interaction(std::span<const double> zi, std::span<const double> zj) {
	if (zi.size() != zj.size()) {
		throw ConfigError("basis", "interaction operands differ in length");
	}
	Columns out(3);
	out[0].assign(zi.begin(), zi.end());
	out[1].assign(zj.begin(), zj.end());
	out[2].resize(zi.size());
	for (std::size_t r = 0; r < zi.size(); ++r) {
		out[2][r] = zi[r] * zj[r];
	}
	return out;
}

SplineInteraction spline_interaction(std::span<const double> zi, std::span<const double> zj) {
	const Columns ia = interaction(zi, zj);
	static const std::array<std::string, 3> operands{"i", "j", "i*j"};
	SplineInteraction out;
	for (std::size_t b = 0; b < ia.size(); ++b) {
		const auto &col = ia[b];
		const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
		if (col.empty() || *mn == *mx) {
			log::warn("basis", "constant operand " + operands[b] + " in spline interaction; block dropped");
			continue;
		}
		const KnotVector knots = quantile_knots(col, 0);
		const BSplineBasis bs(knots);
		const std::size_t first = out.columns.size();
		for (std::size_t k = 0; k < bs.size(); ++k) {
			out.columns.emplace_back(col.size());
			out.labels.push_back("bs" + std::to_string(k) + "(" + operands[b] + ")");
		}
		std::vector<double> buf(bs.size());
		for (std::size_t r = 0; r < col.size(); ++r) {
			bs.evaluate(col[r], buf);
			for (std::size_t k = 0; k < bs.size(); ++k) {
				out.columns[first + k][r] = buf[k];
			}
		}
		out.knots.push_back(knots);
	}
	return out;
}

} // namespace gridcast::basis
