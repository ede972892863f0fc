#include "chronocast/neural.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace chronocast::neural {

std::string_view to_string(Activation a) {
	switch (a) {
	case Activation::Linear:
		return "linear";
	case Activation::Relu:
		return "relu";
	case Activation::Sigmoid:
		return "sigmoid";
	case Activation::Tanh:
		return "tanh";
	}
	return "linear";
}

std::optional<Activation> parse_activation(std::string_view name) {
	for (Activation a : {Activation::Linear, Activation::Relu, Activation::Sigmoid, Activation::Tanh}) {
		if (to_string(a) == name) {
			return a;
		}
	}
	return std::nullopt;
}

double activate(Activation a, double x) {
	switch (a) {
	case Activation::Linear:
		return x;
	case Activation::Relu:
		return x > 0 ? x : 0.0;
	case Activation::Sigmoid:
		return 1.0 / (1.0 + std::exp(-x));
	case Activation::Tanh:
		return std::tanh(x);
	}
	return x;
}

double activate_derivative(Activation a, double pre) {
	switch (a) {
	case Activation::Linear:
		return 1.0;
	case Activation::Relu:
		return pre > 0 ? 1.0 : 0.0;
	case Activation::Sigmoid: {
		const double s = 1.0 / (1.0 + std::exp(-pre));
		return s * (1.0 - s);
	}
	case Activation::Tanh: {
		const double t = std::tanh(pre);
		return 1.0 - t * t;
	}
	}
	return 1.0;
}

DenseNet::DenseNet(std::vector<LayerSpec> layers, std::uint64_t seed) : layers_(std::move(layers)), seed_(seed) {
	if (layers_.empty()) {
		throw std::invalid_argument("DenseNet needs at least one layer");
	}
	std::size_t total = 0;
	for (std::size_t k = 0; k < layers_.size(); ++k) {
		const LayerSpec &l = layers_[k];
		if (l.fan_in == 0 || l.fan_out == 0) {
			throw std::invalid_argument("DenseNet layer sizes must be positive");
		}
		if (k > 0 && layers_[k - 1].fan_out != l.fan_in) {
			throw std::invalid_argument("DenseNet layer " + std::to_string(k) + " fan_in does not chain");
		}
		offsets_.push_back(total);
		total += l.fan_in * l.fan_out + l.fan_out;
	}
	params_.assign(total, 0.0);

	std::mt19937_64 rng(seed);
	for (std::size_t k = 0; k < layers_.size(); ++k) {
		const LayerSpec &l = layers_[k];
		const double fan_in = static_cast<double>(l.fan_in);
		const double limit = l.activation == Activation::Relu ? std::sqrt(6.0 / fan_in)
		                                                      : std::sqrt(6.0 / (fan_in + static_cast<double>(l.fan_out)));
		std::uniform_real_distribution<double> dist(-limit, limit);
		for (std::size_t i = 0; i < l.fan_in * l.fan_out; ++i) {
			params_[weight_offset(k) + i] = dist(rng);
		}
	}
}

DenseNet DenseNet::feed_forward(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
	return DenseNet({{inputs, hidden, Activation::Relu}, {hidden, hidden, Activation::Relu}, {hidden, 1, Activation::Linear}},
	                seed);
}

Matrix DenseNet::forward(const Matrix &batch, Cache *cache) const {
	if (batch.cols() != input_width()) {
		throw std::invalid_argument("DenseNet::forward: input width " + std::to_string(batch.cols()) + ", expected " +
		                            std::to_string(input_width()));
	}
	if (cache != nullptr) {
		cache->generation = generation_;
		cache->inputs.clear();
		cache->pre.clear();
	}
	Matrix x = batch;
	for (std::size_t k = 0; k < layers_.size(); ++k) {
		const LayerSpec &l = layers_[k];
		const double *w = params_.data() + weight_offset(k);
		const double *b = params_.data() + bias_offset(k);
		Matrix pre(x.rows(), l.fan_out);
		for (std::size_t r = 0; r < x.rows(); ++r) {
			const auto in = x.row(r);
			for (std::size_t o = 0; o < l.fan_out; ++o) {
				double acc = b[o];
				const double *wr = w + o * l.fan_in;
				for (std::size_t i = 0; i < l.fan_in; ++i) {
					acc += wr[i] * in[i];
				}
				pre(r, o) = acc;
			}
		}
		Matrix out(pre.rows(), pre.cols());
		for (std::size_t i = 0; i < pre.data().size(); ++i) {
			out.data()[i] = activate(l.activation, pre.data()[i]);
		}
		if (cache != nullptr) {
			cache->inputs.push_back(std::move(x));
			cache->pre.push_back(std::move(pre));
		}
		x = std::move(out);
	}
	return x;
}

Gradients DenseNet::backward(const Cache &cache, const Matrix &d_output) const {
	if (cache.generation != generation_ || cache.inputs.size() != layers_.size()) {
		throw std::logic_error("DenseNet::backward: stale cache (parameters changed since forward)");
	}
	const std::size_t batch = cache.inputs.front().rows();
	if (d_output.rows() != batch || d_output.cols() != layers_.back().fan_out) {
		throw std::invalid_argument("DenseNet::backward: output gradient shape mismatch");
	}
	Gradients g;
	g.params.assign(params_.size(), 0.0);
	Matrix delta = d_output;
	for (std::size_t k = layers_.size(); k-- > 0;) {
		const LayerSpec &l = layers_[k];
		const Matrix &pre = cache.pre[k];
		const Matrix &in = cache.inputs[k];
		for (std::size_t i = 0; i < delta.data().size(); ++i) {
			delta.data()[i] *= activate_derivative(l.activation, pre.data()[i]);
		}
		double *gw = g.params.data() + weight_offset(k);
		double *gb = g.params.data() + bias_offset(k);
		const double *w = params_.data() + weight_offset(k);
		Matrix d_in(batch, l.fan_in);
		for (std::size_t r = 0; r < batch; ++r) {
			const auto x = in.row(r);
			auto dx = d_in.row(r);
			for (std::size_t o = 0; o < l.fan_out; ++o) {
				const double d = delta(r, o);
				gb[o] += d;
				double *gwr = gw + o * l.fan_in;
				const double *wr = w + o * l.fan_in;
				for (std::size_t i = 0; i < l.fan_in; ++i) {
					gwr[i] += d * x[i];
					dx[i] += d * wr[i];
				}
			}
		}
		delta = std::move(d_in);
	}
	g.input = std::move(delta);
	return g;
}

double DenseNet::predict(std::span<const double> window) const {
	Matrix x(1, window.size(), std::vector<double>(window.begin(), window.end()));
	return forward(x)(0, 0);
}

} // namespace chronocast::neural
