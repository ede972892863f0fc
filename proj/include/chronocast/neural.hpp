#pragma once

#include "chronocast/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace chronocast::neural {

enum class Activation { Linear, Relu, Sigmoid, Tanh };

std::string_view to_string(Activation a);
std::optional<Activation> parse_activation(std::string_view name);

double activate(Activation a, double x);
/// Derivative expressed through the pre-activation value.
double activate_derivative(Activation a, double pre);

struct LayerSpec {
	std::size_t fan_in = 0;
	std::size_t fan_out = 0;
	Activation activation = Activation::Linear;

	bool operator==(const LayerSpec &) const = default;
};

/// Flat gradient in the same layout as the owning model's parameters, plus the input gradient.
struct Gradients {
	std::vector<double> params;
	Matrix input;
};

/// Fully connected feed-forward network. Parameters live in one flat array:
/// for each layer, W (fan_out x fan_in, row-major) followed by b (fan_out).
class DenseNet {
public:
	struct Cache {
		std::uint64_t generation = 0;
		std::vector<Matrix> inputs;  // input to each layer
		std::vector<Matrix> pre;     // pre-activation of each layer
	};

	/// Weights are drawn from `seed`: He-uniform for relu layers, Glorot-uniform otherwise; biases start at 0.
	DenseNet(std::vector<LayerSpec> layers, std::uint64_t seed);

	/// 3 -> hidden relu -> hidden relu -> 1 linear.
	static DenseNet feed_forward(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

	const std::vector<LayerSpec> &layers() const noexcept { return layers_; }
	std::uint64_t seed() const noexcept { return seed_; }
	std::size_t input_width() const { return layers_.front().fan_in; }
	std::size_t parameter_count() const noexcept { return params_.size(); }

	/// Mutable access invalidates outstanding caches.
	std::span<double> parameters() {
		++generation_;
		return params_;
	}
	std::span<const double> parameters() const noexcept { return params_; }

	Matrix forward(const Matrix &batch, Cache *cache = nullptr) const;
	Gradients backward(const Cache &cache, const Matrix &d_output) const;
	double predict(std::span<const double> window) const;

private:
	std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
	std::size_t bias_offset(std::size_t layer) const {
		return offsets_[layer] + layers_[layer].fan_in * layers_[layer].fan_out;
	}

	std::vector<LayerSpec> layers_;
	std::vector<std::size_t> offsets_;
	std::vector<double> params_;
	std::uint64_t seed_;
	std::uint64_t generation_ = 0;
};

} // namespace chronocast::neural
