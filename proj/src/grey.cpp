#include "chronocast/grey.hpp"

#include "chronocast/error.hpp"

#include <cmath>
#include <stdexcept>

namespace chronocast::grey {

std::vector<double> accumulate(std::span<const double> x0) {
	if (x0.empty()) {
		throw std::invalid_argument("accumulate: empty sequence");
	}
	std::vector<double> out(x0.size());
	double sum = 0;
	for (std::size_t i = 0; i < x0.size(); ++i) {
		if (!std::isfinite(x0[i])) {
			throw std::invalid_argument("accumulate: non-finite value");
		}
		sum += x0[i];
		out[i] = sum;
	}
	return out;
}

std::vector<double> mean_sequence(std::span<const double> x1) {
	if (x1.size() < 2) {
		throw std::invalid_argument("mean_sequence: need at least 2 values");
	}
	std::vector<double> z(x1.size() - 1);
	for (std::size_t k = 1; k < x1.size(); ++k) {
		z[k - 1] = 0.5 * (x1[k - 1] + x1[k]);
	}
	return z;
}

GreyModel fit_gm11(std::span<const double> x0) {
	if (x0.size() < 4) {
		throw ModelError("GM(1,1) needs at least 4 observations");
	}
	for (double v : x0) {
		if (!(v > 0) || !std::isfinite(v)) {
			throw ModelError("GM(1,1) needs strictly positive finite values");
		}
	}
	const auto z = mean_sequence(accumulate(x0));
	const auto y = x0.subspan(1);
	const double m = static_cast<double>(z.size());

	double z_mean = 0, y_mean = 0;
	for (std::size_t k = 0; k < z.size(); ++k) {
		z_mean += z[k];
		y_mean += y[k];
	}
	z_mean /= m;
	y_mean /= m;

	// Centred normal equations; the accumulated sequence grows large so the raw form loses digits.
	double szz = 0, szy = 0;
	for (std::size_t k = 0; k < z.size(); ++k) {
		const double dz = z[k] - z_mean;
		szz += dz * dz;
		szy += dz * (y[k] - y_mean);
	}
	if (!(szz > 0)) {
		throw ModelError("GM(1,1) normal equations are singular");
	}
	GreyModel model;
	model.a = -szy / szz;
	model.b = y_mean + model.a * z_mean;
	model.x1 = x0[0];
	model.n_fit = x0.size();
	return model;
}

double response(const GreyModel &model, std::size_t j) {
	if (j < 1) {
		throw std::invalid_argument("response: index is 1-based");
	}
	const double t = static_cast<double>(j - 1);
	if (std::abs(model.a) < kDegenerateA) {
		return model.x1 + model.b * t;
	}
	const double ratio = model.b / model.a;
	return (model.x1 - ratio) * std::exp(-model.a * t) + ratio;
}

double value_at(const GreyModel &model, std::size_t j) {
	if (j < 1) {
		throw std::invalid_argument("value_at: index is 1-based");
	}
	if (j == 1) {
		return model.x1;
	}
	if (std::abs(model.a) < kDegenerateA) {
		return model.b;
	}
	const double t = static_cast<double>(j - 1);
	return (model.x1 - model.b / model.a) * std::exp(-model.a * t) * (1.0 - std::exp(model.a));
}

std::vector<double> fitted_values(const GreyModel &model) {
	std::vector<double> out(model.n_fit);
	for (std::size_t j = 1; j <= model.n_fit; ++j) {
		out[j - 1] = value_at(model, j);
	}
	return out;
}

std::vector<double> predict_gm11(const GreyModel &model, std::size_t horizon) {
	if (horizon < 1) {
		throw std::invalid_argument("predict_gm11: horizon must be positive");
	}
	if (!std::isfinite(model.a) || !std::isfinite(model.b) || !std::isfinite(model.x1)) {
		throw ModelError("GM(1,1) parameters are not finite");
	}
	std::vector<double> out(horizon);
	for (std::size_t h = 0; h < horizon; ++h) {
		out[h] = value_at(model, model.n_fit + 1 + h);
	}
	return out;
}

} // namespace chronocast::grey
