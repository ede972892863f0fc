#pragma once

// Central finite differences for models exposing forward/backward over a flat parameter span.
// The probe loss is sum(out .* weights), so d_output = weights.

#include "chronocast/matrix.hpp"

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace oracle {

struct GradMismatch {
	std::size_t worst_index = 0;
	double worst_abs = 0;
	double worst_rel = 0;
	std::size_t failures = 0;
};

inline chronocast::Matrix random_matrix(std::mt19937_64 &rng, std::size_t r, std::size_t c, double lo = -1, double hi = 1) {
	std::uniform_real_distribution<double> u(lo, hi);
	chronocast::Matrix m(r, c);
	for (double &v : m.data()) {
		v = u(rng);
	}
	return m;
}

template <typename Model>
double probe_loss(const Model &model, const chronocast::Matrix &x, const chronocast::Matrix &w) {
	const chronocast::Matrix out = model.forward(x, nullptr);
	double s = 0;
	for (std::size_t i = 0; i < out.data().size(); ++i) {
		s += out.data()[i] * w.data()[i];
	}
	return s;
}

/// A component fails when both |analytic - numeric| > abs_tol and the relative error exceeds rel_tol.
template <typename Model>
GradMismatch check_parameter_gradients(Model &model, const chronocast::Matrix &x, const chronocast::Matrix &w,
                                       double h = 1e-5, double rel_tol = 1e-5, double abs_tol = 1e-7) {
	typename Model::Cache cache;
	model.forward(x, &cache);
	const std::vector<double> analytic = model.backward(cache, w).params;
	GradMismatch out;
	for (std::size_t i = 0; i < analytic.size(); ++i) {
		const double saved = model.parameters()[i];
		model.parameters()[i] = saved + h;
		const double up = probe_loss(model, x, w);
		model.parameters()[i] = saved - h;
		const double down = probe_loss(model, x, w);
		model.parameters()[i] = saved;
		const double numeric = (up - down) / (2 * h);
		const double abs_err = std::fabs(numeric - analytic[i]);
		const double rel_err = abs_err / std::max({std::fabs(numeric), std::fabs(analytic[i]), 1e-300});
		if (abs_err > abs_tol && rel_err > rel_tol) {
			++out.failures;
		}
		if (abs_err > out.worst_abs) {
			out.worst_abs = abs_err;
			out.worst_rel = rel_err;
			out.worst_index = i;
		}
	}
	return out;
}

template <typename Model>
GradMismatch check_input_gradients(Model &model, chronocast::Matrix x, const chronocast::Matrix &w,
                                   double h = 1e-5, double rel_tol = 1e-5, double abs_tol = 1e-7) {
	typename Model::Cache cache;
	model.forward(x, &cache);
	const chronocast::Matrix analytic = model.backward(cache, w).input;
	GradMismatch out;
	for (std::size_t i = 0; i < x.data().size(); ++i) {
		const double saved = x.data()[i];
		x.data()[i] = saved + h;
		const double up = probe_loss(model, x, w);
		x.data()[i] = saved - h;
		const double down = probe_loss(model, x, w);
		x.data()[i] = saved;
		const double numeric = (up - down) / (2 * h);
		const double a = analytic.data()[i];
		const double abs_err = std::fabs(numeric - a);
		const double rel_err = abs_err / std::max({std::fabs(numeric), std::fabs(a), 1e-300});
		if (abs_err > abs_tol && rel_err > rel_tol) {
			++out.failures;
		}
		if (abs_err > out.worst_abs) {
			out.worst_abs = abs_err;
			out.worst_rel = rel_err;
			out.worst_index = i;
		}
	}
	return out;
}

} // namespace oracle
