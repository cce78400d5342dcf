#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridcast::arima {

// Sign conventions follow R's arima():
//   (1 - sum ar_i B^i)(1 - sum sar_j B^jM) (1-B)^d (1-B^M)^D y_t
//       = (1 + sum ma_i B^i)(1 + sum sma_j B^jM) e_t
// No mean term: the series being modelled are regression residuals.

struct ArimaOrder {
	int p = 0, d = 0, q = 0;
	int P = 0, D = 0, Q = 0;
	int M = 1;

	[[nodiscard]] int n_coefficients() const noexcept { return p + q + P + Q; }
	/// d + D*M.
	[[nodiscard]] std::size_t n_differenced() const noexcept;
	/// Throws ConfigError on negative orders, M < 1, or seasonal terms with M == 1.
	void validate() const;
	friend bool operator==(const ArimaOrder &, const ArimaOrder &) = default;
};

/// "(p,d,q)(P,D,Q)_M"
[[nodiscard]] std::string to_string(const ArimaOrder &order);
[[nodiscard]] ArimaOrder parse_order(std::string_view text);

/// Residual-model orders named by the response they correct:
/// "average" = (3,0,0)(0,1,2)_24, "marginal" = (5,1,0)(2,0,0)_24.
[[nodiscard]] ArimaOrder preset(std::string_view name);

/// Values of y and innovations needed to continue the recursion.
struct State {
	std::vector<double> y; // last observations, oldest first
	std::vector<double> e; // last innovations, oldest first
};

struct ArimaModel {
	ArimaOrder order;
	std::vector<double> ar, ma, sar, sma;
	double innovation_variance = 0.0;
	std::size_t n_effective = 0; // innovations summed in the CSS
	double aic = 0.0;
	State state; // end of the training series
};

struct AcfReport {
	std::vector<double> values; // lags 1..max_lag
	double band = 0.0;          // 1.96 / sqrt(n)
	[[nodiscard]] double fraction_inside() const;
};

/// Biased sample autocorrelations. Throws DataError for a constant series.
[[nodiscard]] AcfReport acf(std::span<const double> series, std::size_t max_lag);

/// (1-B)^d (1-B^M)^D; output length n - d - D*M.
[[nodiscard]] std::vector<double> difference(std::span<const double> series, int d, int D = 0, int M = 1);
/// Inverse of difference given the first d + D*M original values.
[[nodiscard]] std::vector<double> undifference(std::span<const double> differenced, std::span<const double> initial,
                                               int d, int D = 0, int M = 1);

/// Product of (1 - sum a_i B^i) and (1 - sum s_j B^jM) as lag coefficients
/// c_k of x_t = sum c_k x_{t-k}; index 0 unused.
[[nodiscard]] std::vector<double> expand_ar(std::span<const double> ar, std::span<const double> sar, int M);
/// Product of (1 + sum a_i B^i) and (1 + sum s_j B^jM); index 0 is 1.
[[nodiscard]] std::vector<double> expand_ma(std::span<const double> ma, std::span<const double> sma, int M);

/// Smallest root modulus of 1 - sum c_i z^i (sign = -1) or 1 + sum c_i z^i
/// (sign = +1); infinity for an empty or all-zero polynomial.
[[nodiscard]] double min_root_modulus(std::span<const double> coefficients, int sign);

struct FitOptions {
	int max_evaluations = 20000;
	double tol = 1e-10; // spread of the simplex objective (log CSS)
};

/// Conditional sum of squares by Nelder-Mead with one restart. Parameters
/// outside the stationary/invertible region cost an extra 1e6. Throws
/// NumericalError when the AR optimum sits on the stationarity boundary and
/// ConfigError when the series is too short.
[[nodiscard]] ArimaModel fit_arima(std::span<const double> series, const ArimaOrder &order,
                                   const FitOptions &options = {});

/// CSS innovations of the training series under the model's coefficients.
[[nodiscard]] std::vector<double> innovations(const ArimaModel &model, std::span<const double> series);

/// Fixed 30-candidate grid with M = 24, including both presets.
[[nodiscard]] std::vector<ArimaOrder> default_candidates();

/// Minimum AIC = n ln(sigma2) + 2 (p + q + P + Q + 1); ties to fewer
/// coefficients, then candidate order. Failed candidates are logged.
[[nodiscard]] ArimaModel auto_fit(std::span<const double> series, std::span<const ArimaOrder> candidates,
                                  const FitOptions &options = {});

/// Runs the recursion over a fresh history to get the state at its end.
[[nodiscard]] State filter(const ArimaModel &model, std::span<const double> history);

struct Forecast {
	std::vector<double> mean;
	std::vector<double> variance; // sigma2 * sum_{j<h} psi_j^2
};

[[nodiscard]] Forecast forecast(const ArimaModel &model, std::size_t h);
[[nodiscard]] Forecast forecast(const ArimaModel &model, const State &state, std::size_t h);
/// psi weights of the integrated model, psi_0 = 1.
[[nodiscard]] std::vector<double> psi_weights(const ArimaModel &model, std::size_t n);

struct Corrected {
	double point = 0.0;
	double correction = 0.0;
	double variance = 0.0;
	double lo = 0.0;
	double hi = 0.0;
};

/// base + ARIMA step-h residual forecast. The variance adds the linear
/// model's mean variance and the ARIMA step-h variance (independence).
[[nodiscard]] Corrected corrected_forecast(double base, double base_mean_variance, const ArimaModel &model,
                                           std::span<const double> residual_history, std::size_t h,
                                           double level = 0.95);

[[nodiscard]] nlohmann::json to_json(const ArimaModel &model);
[[nodiscard]] ArimaModel model_from_json(const nlohmann::json &j);

} // namespace gridcast::arima
