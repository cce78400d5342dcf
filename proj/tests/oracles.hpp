#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance gate.

#include "gridcast/arima.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

// Normal equations in long double, Gauss-Jordan with partial pivoting.
inline std::vector<long double> normal_equations(const Eigen::MatrixXd &X, const Eigen::VectorXd &y) {
	const auto m = static_cast<std::size_t>(X.cols());
	std::vector<std::vector<long double>> a(m, std::vector<long double>(m + 1, 0.0L));
	for (Eigen::Index r = 0; r < X.rows(); ++r) {
		for (std::size_t i = 0; i < m; ++i) {
			for (std::size_t j = 0; j < m; ++j) {
				a[i][j] += static_cast<long double>(X(r, i)) * X(r, j);
			}
			a[i][m] += static_cast<long double>(X(r, i)) * y(r);
		}
	}
	for (std::size_t c = 0; c < m; ++c) {
		std::size_t p = c;
		for (std::size_t r = c + 1; r < m; ++r) {
			if (std::fabs(a[r][c]) > std::fabs(a[p][c])) {
				p = r;
			}
		}
		std::swap(a[c], a[p]);
		for (std::size_t r = 0; r < m; ++r) {
			if (r != c) {
				const long double f = a[r][c] / a[c][c];
				for (std::size_t k = c; k <= m; ++k) {
					a[r][k] -= f * a[c][k];
				}
			}
		}
	}
	std::vector<long double> b(m);
	for (std::size_t i = 0; i < m; ++i) {
		b[i] = a[i][m] / a[i][i];
	}
	return b;
}

// Seasonal ARMA by direct recursion on the expanded polynomials, with burn-in.
inline std::vector<double> simulate(const gridcast::arima::ArimaModel &m, std::size_t n, std::uint64_t seed,
                                    double sd = 1.0) {
	std::mt19937_64 rng(seed);
	std::normal_distribution<double> z(0.0, sd);
	const auto ar = gridcast::arima::expand_ar(m.ar, m.sar, m.order.M);
	const auto ma = gridcast::arima::expand_ma(m.ma, m.sma, m.order.M);
	const std::size_t burn = 2000;
	std::vector<double> w(n + burn, 0.0);
	std::vector<double> e(n + burn, 0.0);
	for (std::size_t t = 0; t < w.size(); ++t) {
		e[t] = z(rng);
		double v = e[t];
		for (std::size_t k = 1; k < ar.size() && k <= t; ++k) {
			v += ar[k] * w[t - k];
		}
		for (std::size_t k = 1; k < ma.size() && k <= t; ++k) {
			v += ma[k] * e[t - k];
		}
		w[t] = v;
	}
	return {w.begin() + static_cast<std::ptrdiff_t>(burn), w.end()};
}

inline gridcast::arima::ArimaModel arma(std::vector<double> ar, std::vector<double> ma, std::vector<double> sar = {},
                                        std::vector<double> sma = {}, int M = 1) {
	gridcast::arima::ArimaModel m;
	m.order = {static_cast<int>(ar.size()), 0, static_cast<int>(ma.size()), static_cast<int>(sar.size()), 0,
	           static_cast<int>(sma.size()), M};
	m.ar = std::move(ar);
	m.ma = std::move(ma);
	m.sar = std::move(sar);
	m.sma = std::move(sma);
	m.innovation_variance = 1.0;
	return m;
}

} // namespace oracle
