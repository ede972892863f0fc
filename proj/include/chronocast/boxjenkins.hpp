#pragma once

#include "chronocast/calendar.hpp"
#include "chronocast/matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chronocast::boxjenkins {

/// (p,d,q)(P,D,Q)_s. s = 0 means no seasonal part, in which case P = D = Q = 0.
struct ArimaOrder {
	int p = 0;
	int d = 0;
	int q = 0;
	int P = 0;
	int D = 0;
	int Q = 0;
	int s = 0;

	void validate() const;
	/// Observations consumed by differencing: d + D*s.
	std::size_t differencing_loss() const { return static_cast<std::size_t>(d + D * s); }
	bool operator==(const ArimaOrder &) const = default;
};

/// Values needed to invert differencing: the leading entries dropped at each stage,
/// in the order the stages were applied (seasonal stages first, then ordinary).
struct DifferenceState {
	int d = 0;
	int D = 0;
	int s = 0;
	std::vector<std::vector<double>> heads;
};

struct Differenced {
	std::vector<double> values;
	DifferenceState state;
};

/// Applies (1 - B^s)^D, then (1 - B)^d.
Differenced difference(std::span<const double> y, int d, int D = 0, int s = 0);

/// Exact left inverse of `difference`.
std::vector<double> undifference(std::span<const double> diffed, const DifferenceState &state);

struct AdfResult {
	double statistic = 0;
	int lags = 0;
	std::size_t n_obs = 0;
	double critical_value = 0;
	bool rejects_unit_root = false;
};

/// Large-sample 5% critical value of the constant-only Dickey-Fuller distribution.
inline constexpr double kAdfCritical5pct = -2.86;

/// floor(12 * (n/100)^(1/4)).
int default_adf_lags(std::size_t n);

/// Augmented Dickey-Fuller regression with constant. Needs at least 20 observations.
AdfResult adf_test(std::span<const double> y, std::optional<int> lags = std::nullopt);

struct LjungBoxResult {
	double q = 0;
	int df = 0;
	double critical_value = 0;
	bool white_noise = false;
};

/// 95% quantile of the chi-square distribution, df in 1..40.
double chi_square_critical_95(int df);

/// Ljung-Box Q over `lags` autocorrelations; df = lags - fitted_params.
LjungBoxResult ljung_box(std::span<const double> residuals, int lags, int fitted_params = 0);

struct FitOptions {
	int max_iterations = 2000;
	double objective_tolerance = 1e-10;
	double parameter_tolerance = 1e-8;
};

/// ARIMA/SARIMAX fitted by conditional sum of squares. Coefficient sign conventions:
/// AR polynomial 1 - sum(phi_i B^i), MA polynomial 1 + sum(theta_i B^i), same for the seasonal parts.
struct ArimaModel {
	ArimaOrder order;
	std::vector<double> ar;
	std::vector<double> ma;
	std::vector<double> seasonal_ar;
	std::vector<double> seasonal_ma;
	std::vector<double> exog_coeffs;
	bool has_intercept = false;
	double intercept = 0;  // mean of the differenced process when has_intercept
	double residual_variance = 0;
	double css = 0;
	std::size_t n_effective = 0;
	int iterations = 0;
	std::vector<double> objective_trace;  // CSS after each accepted optimizer step, starting value first
	std::vector<std::string> warnings;

	// Forecast state at the end of the observed data.
	double presample_level = 0;   // differenced-series mean used for pre-sample values
	std::vector<double> tail_y;   // last d + D*s + 1 observations
	std::vector<double> tail_w;   // last AR-lag differenced values (oldest first)
	std::vector<double> tail_e;   // last MA-lag residuals (oldest first)
	std::vector<double> residuals;  // in-sample residuals of the differenced series

	/// Expanded AR lag coefficients phi*_1..phi*_{p+P*s}.
	std::vector<double> ar_lags() const;
	/// Expanded MA lag coefficients theta*_1..theta*_{q+Q*s}.
	std::vector<double> ma_lags() const;
};

/// Fits the model on y (and exogenous regressors with one row per observation, when given).
ArimaModel fit(std::span<const double> y, const ArimaOrder &order, const Matrix *exog = nullptr,
               const FitOptions &options = {});

/// Fixed-origin forecast from the end of the model's data. Future shocks are zero.
std::vector<double> forecast(const ArimaModel &model, std::size_t horizon, const Matrix *future_exog = nullptr);

struct FilterResult {
	std::vector<double> one_step;  // prediction of each new observation from data before it
	ArimaModel model;              // state advanced past the new observations, parameters unchanged
};

/// Runs the fitted recursion through new observations without refitting.
FilterResult filter(const ArimaModel &model, std::span<const double> y_new, const Matrix *exog_new = nullptr);

/// Six day-of-week indicators (Tuesday..Sunday); Monday is the all-zero baseline.
Matrix default_calendar_exog(std::span<const Date> dates);

} // namespace chronocast::boxjenkins
