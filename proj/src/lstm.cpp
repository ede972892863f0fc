#include "chronocast/lstm.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace chronocast::lstm {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double relu(double x) { return x > 0 ? x : 0.0; }

} // namespace

LstmState cell_step(const LstmLayerView &layer, const LstmState &state, std::span<const double> x, StepCache *cache) {
	const std::size_t H = layer.hidden_size;
	if (x.size() != layer.input_size || state.c.size() != H || state.h.size() != H) {
		throw std::invalid_argument("cell_step: shape mismatch");
	}
	if (layer.weights.size() != 4 * H * layer.concat_size() || layer.biases.size() != 4 * H) {
		throw std::invalid_argument("cell_step: parameter block has the wrong size");
	}
	std::vector<double> z(state.h);
	z.insert(z.end(), x.begin(), x.end());

	std::vector<double> f(H), in(H), g(H), o(H);
	const std::size_t K = layer.concat_size();
	auto affine = [&](Gate gate, std::size_t r) {
		const double *w = layer.weights.data() + (gate * H + r) * K;
		double s = layer.b(gate, r);
		for (std::size_t k = 0; k < K; ++k) {
			s += w[k] * z[k];
		}
		return s;
	};
	LstmState next{std::vector<double>(H), std::vector<double>(H)};
	for (std::size_t r = 0; r < H; ++r) {
		f[r] = sigmoid(affine(Forget, r));
		in[r] = sigmoid(affine(Input, r));
		g[r] = std::tanh(affine(Candidate, r));
		o[r] = sigmoid(affine(Output, r));
		next.c[r] = f[r] * state.c[r] + in[r] * g[r];
		next.h[r] = o[r] * std::tanh(next.c[r]);
	}
	if (cache) {
		*cache = StepCache{std::move(z), std::move(f), std::move(in), std::move(g), std::move(o), state.c, next.c};
	}
	return next;
}

std::size_t LstmNet::parameter_count(const LstmConfig &config) {
	std::size_t total = 0;
	std::size_t in = config.input_size;
	for (std::size_t h : config.hidden_sizes) {
		total += LstmLayer::parameter_count(in, h);
		in = h;
	}
	return total + in + 1;
}

LstmNet::LstmNet(LstmConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
	if (config_.input_size == 0 || config_.hidden_sizes.empty()) {
		throw std::invalid_argument("LstmNet needs a positive input size and at least one layer");
	}
	std::mt19937_64 rng(seed);
	std::size_t in = config_.input_size;
	for (std::size_t h : config_.hidden_sizes) {
		if (h == 0) {
			throw std::invalid_argument("LstmNet hidden sizes must be positive");
		}
		offsets_.push_back(params_.size());
		const double limit = std::sqrt(6.0 / static_cast<double>(in + h + h));
		std::uniform_real_distribution<double> dist(-limit, limit);
		for (std::size_t k = 0; k < 4 * h * (h + in); ++k) {
			params_.push_back(dist(rng));
		}
		for (std::size_t gate = 0; gate < 4; ++gate) {
			params_.insert(params_.end(), h, gate == Forget ? 1.0 : 0.0);
		}
		in = h;
	}
	offsets_.push_back(params_.size());
	const double limit = std::sqrt(6.0 / static_cast<double>(in + 1));
	std::uniform_real_distribution<double> dist(-limit, limit);
	for (std::size_t k = 0; k < in; ++k) {
		params_.push_back(dist(rng));
	}
	params_.push_back(0.0);
}

LstmLayerView LstmNet::layer(std::size_t k) const {
	const std::size_t in = k == 0 ? config_.input_size : config_.hidden_sizes[k - 1];
	const std::size_t h = config_.hidden_sizes.at(k);
	const std::size_t nw = 4 * h * (h + in);
	const std::span<const double> all(params_);
	return {in, h, all.subspan(offsets_[k], nw), all.subspan(offsets_[k] + nw, 4 * h)};
}

Matrix LstmNet::forward(const Matrix &batch, Cache *cache) const {
	const std::size_t width = config_.input_size;
	if (batch.cols() == 0 || batch.cols() % width != 0) {
		throw std::invalid_argument("LstmNet::forward: row width " + std::to_string(batch.cols()) +
		                            " is not a multiple of the input size");
	}
	const std::size_t steps = batch.cols() / width;
	const std::size_t L = layer_count();
	if (cache) {
		cache->generation = generation_;
		cache->batch = batch.rows();
		cache->steps = steps;
		cache->cells.assign(batch.rows(), std::vector<std::vector<StepCache>>(L, std::vector<StepCache>(steps)));
		cache->last_emitted.assign(batch.rows(), {});
	}
	const std::size_t head = head_offset();
	const std::size_t top = config_.hidden_sizes.back();
	Matrix out(batch.rows(), 1);
	for (std::size_t n = 0; n < batch.rows(); ++n) {
		std::vector<std::vector<double>> seq(steps);
		for (std::size_t t = 0; t < steps; ++t) {
			const auto r = batch.row(n).subspan(t * width, width);
			seq[t].assign(r.begin(), r.end());
		}
		for (std::size_t l = 0; l < L; ++l) {
			const LstmLayerView view = layer(l);
			LstmState state = LstmState::zeros(view.hidden_size);
			for (std::size_t t = 0; t < steps; ++t) {
				state = cell_step(view, state, seq[t], cache ? &cache->cells[n][l][t] : nullptr);
				seq[t] = state.h;
				if (config_.relu_on_hidden) {
					for (double &v : seq[t]) {
						v = relu(v);
					}
				}
			}
		}
		double y = params_[head + top];
		for (std::size_t k = 0; k < top; ++k) {
			y += params_[head + k] * seq[steps - 1][k];
		}
		out(n, 0) = y;
		if (cache) {
			cache->last_emitted[n] = std::move(seq[steps - 1]);
		}
	}
	return out;
}

neural::Gradients LstmNet::backward(const Cache &cache, const Matrix &d_output) const {
	if (cache.generation != generation_) {
		throw std::logic_error("LstmNet::backward: cache is stale (parameters changed since forward)");
	}
	if (d_output.rows() != cache.batch || d_output.cols() != 1) {
		throw std::invalid_argument("LstmNet::backward: d_output shape does not match the cached batch");
	}
	const std::size_t L = layer_count();
	const std::size_t steps = cache.steps;
	const std::size_t head = head_offset();
	const std::size_t top = config_.hidden_sizes.back();
	neural::Gradients grads{std::vector<double>(params_.size(), 0.0), Matrix(cache.batch, steps * config_.input_size)};

	for (std::size_t n = 0; n < cache.batch; ++n) {
		const double dy = d_output(n, 0);
		grads.params[head + top] += dy;
		// gradient w.r.t. the emitted (post-relu) sequence of the current layer
		std::vector<std::vector<double>> d_emit(steps, std::vector<double>(top, 0.0));
		for (std::size_t k = 0; k < top; ++k) {
			grads.params[head + k] += dy * cache.last_emitted[n][k];
			d_emit[steps - 1][k] = dy * params_[head + k];
		}
		for (std::size_t l = L; l-- > 0;) {
			const LstmLayerView view = layer(l);
			const std::size_t H = view.hidden_size;
			const std::size_t K = view.concat_size();
			const std::size_t w_off = offsets_[l];
			const std::size_t b_off = w_off + 4 * H * K;
			std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0);
			std::vector<std::vector<double>> d_in(steps, std::vector<double>(view.input_size, 0.0));
			std::vector<double> da(4 * H);
			for (std::size_t t = steps; t-- > 0;) {
				const StepCache &sc = cache.cells[n][l][t];
				for (std::size_t r = 0; r < H; ++r) {
					const double tc = std::tanh(sc.c[r]);
					const double h = sc.o[r] * tc;
					double dh = dh_next[r];
					if (config_.relu_on_hidden) {
						dh += h > 0 ? d_emit[t][r] : 0.0;
					} else {
						dh += d_emit[t][r];
					}
					const double dc = dh * sc.o[r] * (1.0 - tc * tc) + dc_next[r];
					da[Forget * H + r] = dc * sc.c_prev[r] * sc.f[r] * (1.0 - sc.f[r]);
					da[Input * H + r] = dc * sc.g[r] * sc.i[r] * (1.0 - sc.i[r]);
					da[Candidate * H + r] = dc * sc.i[r] * (1.0 - sc.g[r] * sc.g[r]);
					da[Output * H + r] = dh * tc * sc.o[r] * (1.0 - sc.o[r]);
					dc_next[r] = dc * sc.f[r];
				}
				std::vector<double> dz(K, 0.0);
				for (std::size_t row = 0; row < 4 * H; ++row) {
					const double a = da[row];
					if (a == 0.0) {
						continue;
					}
					grads.params[b_off + row] += a;
					double *gw = grads.params.data() + w_off + row * K;
					const double *w = view.weights.data() + row * K;
					for (std::size_t k = 0; k < K; ++k) {
						gw[k] += a * sc.z[k];
						dz[k] += a * w[k];
					}
				}
				std::copy(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(H), dh_next.begin());
				std::copy(dz.begin() + static_cast<std::ptrdiff_t>(H), dz.end(), d_in[t].begin());
			}
			d_emit = std::move(d_in);
		}
		for (std::size_t t = 0; t < steps; ++t) {
			for (std::size_t k = 0; k < config_.input_size; ++k) {
				grads.input(n, t * config_.input_size + k) = d_emit[t][k];
			}
		}
	}
	return grads;
}

double LstmNet::predict(std::span<const double> window) const {
	const Matrix x(1, window.size(), std::vector<double>(window.begin(), window.end()));
	return forward(x)(0, 0);
}

} // namespace chronocast::lstm
