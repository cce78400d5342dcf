#pragma once

#include "gridcast/timeseries.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gridcast::basis {

/// [sin(2πt/period), cos(2πt/period), ..., sin(2πnt/period), cos(2πnt/period)].
/// No constant term; the regression intercept owns it.
[[nodiscard]] std::vector<double> fourier_terms(double t, int n_order, double period);

/// Boundary knots plus strictly ascending interior knots inside (lo, hi).
struct KnotVector {
	double lo = 0.0;
	double hi = 1.0;
	std::vector<double> interior;

	/// Throws ConfigError unless lo < interior... < hi.
	void validate() const;
	friend bool operator==(const KnotVector &, const KnotVector &) = default;
};

/// Boundary = min/max, interior knots at the k/(n+1) quantiles (linear
/// interpolation between order statistics). Coinciding interior knots are
/// merged, so fewer than n_interior may come back for heavily tied data.
/// Missing values are ignored. Throws DataError if fewer than two distinct values.
[[nodiscard]] KnotVector quantile_knots(std::span<const double> values, int n_interior);

/// Empirical quantile, type 7 (R's default).
[[nodiscard]] double quantile_type7(std::vector<double> sorted_values, double p);

/// Clamped cubic B-spline basis. count = interior knots + 4. Inputs outside
/// [lo, hi] are clamped to the boundary.
class BSplineBasis {
public:
	explicit BSplineBasis(KnotVector knots);

	[[nodiscard]] std::size_t size() const noexcept { return knots_.interior.size() + 4; }
	[[nodiscard]] const KnotVector &knots() const noexcept { return knots_; }

	/// Writes size() values into out.
	void evaluate(double x, std::span<double> out) const;
	[[nodiscard]] std::vector<double> operator()(double x) const;

	/// Derivatives of order 0..2 at x (not clamped); rows are the order.
	[[nodiscard]] Eigen::MatrixXd derivatives(double x) const;

private:
	KnotVector knots_;
	std::vector<double> sequence_; // full knot sequence with end multiplicity 4
	[[nodiscard]] std::size_t span_index(double x) const;
};

/// Natural cubic spline basis in the style of R's ns() without intercept:
/// the B-spline basis projected onto the null space of the second-derivative
/// constraints at both boundaries, first column dropped. count = interior + 1.
/// Beyond the boundary each basis function continues linearly.
class NaturalSplineBasis {
public:
	explicit NaturalSplineBasis(KnotVector knots);

	[[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(projection_.cols()); }
	[[nodiscard]] const KnotVector &knots() const noexcept { return bspline_.knots(); }

	void evaluate(double x, std::span<double> out) const;
	[[nodiscard]] std::vector<double> operator()(double x) const;

private:
	BSplineBasis bspline_;
	Eigen::MatrixXd projection_;   // (B-spline size - 1) x size()
	Eigen::VectorXd value_lo_, slope_lo_, value_hi_, slope_hi_;
	[[nodiscard]] Eigen::VectorXd inside(double x) const;
};

/// Convenience wrappers. bspline_basis requires count = interior + 4 and
/// natural_spline_basis count = interior + 1.
[[nodiscard]] std::vector<double> bspline_basis(double x, const KnotVector &knots, int count = 4);
[[nodiscard]] std::vector<double> natural_spline_basis(double x, const KnotVector &knots, int count);

inline constexpr std::size_t kTauWidth = 15;

/// Names of the 15 τ columns in emission order.
[[nodiscard]] const std::array<std::string, kTauWidth> &tau_names();

/// Periodic time variables for one hour: raw hour, weekday, month; their
/// sine encodings; then periodic cubic B-splines 2..4 (of 5, equally spaced
/// over the period) for hour, weekday and month.
[[nodiscard]] std::array<double, kTauWidth> tau_row(const timeseries::CalendarFields &cal);
[[nodiscard]] std::array<double, kTauWidth> tau_row(timeseries::HourStamp stamp);

/// Periodic cubic B-spline k (1-based of `count`) evaluated at x over `period`.
[[nodiscard]] double periodic_spline(double x, double period, int count, int k);

using Columns = std::vector<std::vector<double>>;

/// [z_i, z_j, z_i * z_j]. Throws ConfigError on length mismatch.
[[nodiscard]] Columns interaction(std::span<const double> zi, std::span<const double> zj);

/// bs_0..bs_3 of z_i, of z_j and of z_i * z_j with per-column quantile knots.
/// A constant input drops its 4-column block with a warning.
struct SplineInteraction {
	Columns columns;
	std::vector<std::string> labels; // "bs<k>(<operand>)" with operand i, j or i*j
	std::vector<KnotVector> knots;   // one per kept block
};

[[nodiscard]] SplineInteraction spline_interaction(std::span<const double> zi, std::span<const double> zj);

} // namespace gridcast::basis
