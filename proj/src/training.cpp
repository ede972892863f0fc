#include "chronocast/training.hpp"

#include <stdexcept>

namespace chronocast::neural {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState &state, const AdamConfig &cfg) {
	if (params.size() != grads.size() || params.size() != state.m.size()) {
		throw std::invalid_argument("adam_step: shape mismatch");
	}
	++state.step;
	const double t = static_cast<double>(state.step);
	const double c1 = 1.0 - std::pow(cfg.beta1, t);
	const double c2 = 1.0 - std::pow(cfg.beta2, t);
	for (std::size_t i = 0; i < params.size(); ++i) {
		const double g = grads[i];
		state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
		state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
		const double m_hat = state.m[i] / c1;
		const double v_hat = state.v[i] / c2;
		params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
	}
}

Dataset slice(const Windows &windows, IndexRange range) {
	if (range.end > windows.count() || range.begin > range.end) {
		throw std::out_of_range("slice: range outside the sample set");
	}
	Dataset d{Matrix(range.size(), windows.width), {}};
	d.targets.reserve(range.size());
	for (std::size_t i = range.begin; i < range.end; ++i) {
		const auto src = windows.input(i);
		std::copy(src.begin(), src.end(), d.inputs.row(i - range.begin).begin());
		d.targets.push_back(windows.targets[i]);
	}
	return d;
}

double mean_squared_error(std::span<const double> predicted, std::span<const double> targets) {
	if (predicted.size() != targets.size() || targets.empty()) {
		throw std::invalid_argument("mean_squared_error: size mismatch or empty");
	}
	double s = 0;
	for (std::size_t i = 0; i < targets.size(); ++i) {
		const double e = predicted[i] - targets[i];
		s += e * e;
	}
	return s / static_cast<double>(targets.size());
}

void validate_train_config(const TrainConfig &cfg) {
	if (cfg.epochs < 1) {
		throw std::invalid_argument("epochs must be >= 1");
	}
	if (cfg.batch_size < 1) {
		throw std::invalid_argument("batch_size must be >= 1");
	}
	if (!(cfg.adam.beta1 > 0 && cfg.adam.beta1 < 1 && cfg.adam.beta2 > 0 && cfg.adam.beta2 < 1)) {
		throw std::invalid_argument("Adam betas must lie in (0, 1)");
	}
	if (!(cfg.adam.learning_rate > 0)) {
		throw std::invalid_argument("learning rate must be positive");
	}
}

} // namespace chronocast::neural
