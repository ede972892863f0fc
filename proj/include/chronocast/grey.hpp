#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chronocast::grey {

/// Fitted GM(1,1). `a` is the negated development coefficient, `b` the grey action quantity,
/// `x1` the first fitted observation (initial condition), `n_fit` the number of observations used.
struct GreyModel {
	double a = 0;
	double b = 0;
	double x1 = 0;
	std::size_t n_fit = 0;
};

/// |a| below this uses the constant limit of the time response.
inline constexpr double kDegenerateA = 1e-12;

/// First-order accumulated generating operation (running prefix sums).
std::vector<double> accumulate(std::span<const double> x0);

/// Adjacent means z_k = (x1[k-1] + x1[k]) / 2, k = 2..n. Length n-1.
std::vector<double> mean_sequence(std::span<const double> x1);

/// Least-squares (a, b) of x0[k] + a z[k] = b over k = 2..n.
/// Requires at least 4 strictly positive values.
GreyModel fit_gm11(std::span<const double> x0);

/// Accumulated time response at 1-based index j.
double response(const GreyModel &model, std::size_t j);

/// Restored value at 1-based index j >= 1. Index 1 returns x1; j <= n_fit are in-sample fits.
double value_at(const GreyModel &model, std::size_t j);

/// In-sample fitted values for j = 1..n_fit.
std::vector<double> fitted_values(const GreyModel &model);

/// Out-of-sample forecast for j = n_fit + 1 .. n_fit + horizon.
std::vector<double> predict_gm11(const GreyModel &model, std::size_t horizon);

} // namespace chronocast::grey
