#pragma once

#include "chronocast/matrix.hpp"
#include "chronocast/neural.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace chronocast::lstm {

/// Gate blocks are stored in (f, i, c, o) order.
enum Gate : std::size_t { Forget = 0, Input = 1, Candidate = 2, Output = 3 };

/// Read-only view of one layer's parameters. W is (4*hidden) x (hidden + input), row-major,
/// columns ordered [H_{t-1}, X_t]; b has length 4*hidden.
struct LstmLayerView {
	std::size_t input_size = 0;
	std::size_t hidden_size = 0;
	std::span<const double> weights;
	std::span<const double> biases;

	std::size_t concat_size() const noexcept { return hidden_size + input_size; }
	double w(Gate g, std::size_t row, std::size_t col) const {
		return weights[(g * hidden_size + row) * concat_size() + col];
	}
	double b(Gate g, std::size_t row) const { return biases[g * hidden_size + row]; }
};

/// Owning layer, convenient for standalone cell evaluation.
struct LstmLayer {
	std::size_t input_size = 0;
	std::size_t hidden_size = 0;
	std::vector<double> weights;
	std::vector<double> biases;

	LstmLayer(std::size_t input, std::size_t hidden)
	    : input_size(input), hidden_size(hidden), weights(4 * hidden * (hidden + input), 0.0), biases(4 * hidden, 0.0) {}

	LstmLayerView view() const { return {input_size, hidden_size, weights, biases}; }
	static std::size_t parameter_count(std::size_t input, std::size_t hidden) {
		return 4 * ((hidden + input) * hidden + hidden);
	}
};

struct LstmState {
	std::vector<double> c;
	std::vector<double> h;

	static LstmState zeros(std::size_t hidden) { return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)}; }
};

struct StepCache {
	std::vector<double> z;  // [H_{t-1}, X_t]
	std::vector<double> f, i, g, o;
	std::vector<double> c_prev;
	std::vector<double> c;
};

LstmState cell_step(const LstmLayerView &layer, const LstmState &state, std::span<const double> x, StepCache *cache = nullptr);

struct LstmConfig {
	std::size_t input_size = 1;
	std::vector<std::size_t> hidden_sizes{50, 50};
	bool relu_on_hidden = true;
};

/// Stacked LSTM layers followed by a linear dense head on the last hidden state.
/// Flat parameter layout: for each layer W then b, then the head's weights and bias.
class LstmNet {
public:
	struct Cache {
		std::uint64_t generation = 0;
		std::size_t batch = 0;
		std::size_t steps = 0;
		// steps[sample][layer][t]
		std::vector<std::vector<std::vector<StepCache>>> cells;
		std::vector<std::vector<double>> last_emitted;
	};

	/// Gate weights Glorot-uniform from `seed`; biases 0 except the forget gate at 1.
	LstmNet(LstmConfig config, std::uint64_t seed);

	const LstmConfig &config() const noexcept { return config_; }
	std::uint64_t seed() const noexcept { return seed_; }
	std::size_t layer_count() const noexcept { return config_.hidden_sizes.size(); }
	std::size_t parameter_count() const noexcept { return params_.size(); }
	static std::size_t parameter_count(const LstmConfig &config);

	std::span<double> parameters() {
		++generation_;
		return params_;
	}
	std::span<const double> parameters() const noexcept { return params_; }

	LstmLayerView layer(std::size_t k) const;

	/// Each row is one sequence of (steps x input_size) values, time-major.
	Matrix forward(const Matrix &batch, Cache *cache = nullptr) const;
	neural::Gradients backward(const Cache &cache, const Matrix &d_output) const;
	double predict(std::span<const double> window) const;

private:
	std::size_t head_offset() const noexcept { return offsets_.back(); }

	LstmConfig config_;
	std::vector<std::size_t> offsets_;  // layer offsets, plus the head offset at the end
	std::vector<double> params_;
	std::uint64_t seed_;
	std::uint64_t generation_ = 0;
};

} // namespace chronocast::lstm
