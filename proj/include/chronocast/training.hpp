#pragma once

#include "chronocast/data.hpp"
#include "chronocast/error.hpp"
#include "chronocast/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chronocast::neural {

struct AdamConfig {
	double learning_rate = 1e-3;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double epsilon = 1e-8;
};

struct AdamState {
	std::vector<double> m;
	std::vector<double> v;
	long step = 0;

	explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState &state, const AdamConfig &cfg);

struct TrainConfig {
	int epochs = 3000;
	std::size_t batch_size = 32;
	AdamConfig adam;
	std::uint64_t shuffle_seed = 42;
};

struct EpochRecord {
	int epoch = 0;
	double train_mse = 0;       // mean of per-sample squared errors seen during the epoch
	double validation_mse = 0;  // after the epoch's last update
};

struct TrainResult {
	std::vector<EpochRecord> history;
	int best_epoch = 0;
	double best_validation_mse = 0;
};

struct Dataset {
	Matrix inputs;
	std::vector<double> targets;

	std::size_t size() const noexcept { return targets.size(); }
};

/// Windows and targets of a sample range.
Dataset slice(const Windows &windows, IndexRange range);

double mean_squared_error(std::span<const double> predicted, std::span<const double> targets);

void validate_train_config(const TrainConfig &cfg);

/// Mini-batch Adam on squared error with a seeded shuffle per epoch. After every epoch the validation
/// MSE is measured; the parameters with the lowest one are restored at the end. With an empty
/// validation set the epoch's training MSE stands in.
///
/// Model needs: forward(const Matrix&, Cache*) const -> Matrix (n x 1),
/// backward(const Cache&, const Matrix&) const -> Gradients, parameters() -> span<double>.
template <typename Model>
TrainResult train(Model &model, const Dataset &train_set, const Dataset &validation_set, const TrainConfig &cfg) {
	validate_train_config(cfg);
	if (train_set.size() == 0) {
		throw ModelError("training set is empty");
	}
	const std::size_t n = train_set.size();
	const std::size_t width = train_set.inputs.cols();
	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), 0);
	std::mt19937_64 rng(cfg.shuffle_seed);
	AdamState adam(model.parameters().size());

	TrainResult result;
	std::vector<double> best(model.parameters().begin(), model.parameters().end());
	double best_score = 0;

	for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
		std::shuffle(order.begin(), order.end(), rng);
		double sse = 0;
		for (std::size_t start = 0; start < n; start += cfg.batch_size) {
			const std::size_t b = std::min(cfg.batch_size, n - start);
			Matrix x(b, width);
			std::vector<double> y(b);
			for (std::size_t r = 0; r < b; ++r) {
				const auto src = train_set.inputs.row(order[start + r]);
				std::copy(src.begin(), src.end(), x.row(r).begin());
				y[r] = train_set.targets[order[start + r]];
			}
			typename Model::Cache cache;
			const Matrix out = model.forward(x, &cache);
			Matrix d_out(b, 1);
			for (std::size_t r = 0; r < b; ++r) {
				const double e = out(r, 0) - y[r];
				sse += e * e;
				d_out(r, 0) = 2.0 * e / static_cast<double>(b);
			}
			if (!std::isfinite(sse)) {
				throw TrainingError("training diverged (non-finite loss) in epoch " + std::to_string(epoch), epoch);
			}
			const auto grads = model.backward(cache, d_out);
			adam_step(model.parameters(), grads.params, adam, cfg.adam);
		}
		EpochRecord rec{epoch, sse / static_cast<double>(n), 0.0};
		if (validation_set.size() > 0) {
			const Matrix pred = model.forward(validation_set.inputs, nullptr);
			rec.validation_mse = mean_squared_error(pred.data(), validation_set.targets);
		} else {
			rec.validation_mse = rec.train_mse;
		}
		if (!std::isfinite(rec.validation_mse)) {
			throw TrainingError("training diverged (non-finite validation loss) in epoch " + std::to_string(epoch), epoch);
		}
		result.history.push_back(rec);
		if (epoch == 1 || rec.validation_mse < best_score) {
			best_score = rec.validation_mse;
			result.best_epoch = epoch;
			const auto p = std::as_const(model).parameters();
			best.assign(p.begin(), p.end());
		}
	}
	const auto p = model.parameters();
	std::copy(best.begin(), best.end(), p.begin());
	result.best_validation_mse = best_score;
	return result;
}

/// Recursive multi-step forecast: each prediction is appended to the sliding window.
template <typename Model>
std::vector<double> forecast_recursive(const Model &model, std::span<const double> seed_window, std::size_t horizon) {
	std::vector<double> window(seed_window.begin(), seed_window.end());
	std::vector<double> out;
	out.reserve(horizon);
	for (std::size_t h = 0; h < horizon; ++h) {
		const double next = model.predict(window);
		out.push_back(next);
		std::rotate(window.begin(), window.begin() + 1, window.end());
		window.back() = next;
	}
	return out;
}

/// One-step predictions for every row of `inputs`.
template <typename Model>
std::vector<double> predict_rows(const Model &model, const Matrix &inputs) {
	std::vector<double> out(inputs.rows());
	for (std::size_t r = 0; r < inputs.rows(); ++r) {
		out[r] = model.predict(inputs.row(r));
	}
	return out;
}

} // namespace chronocast::neural
