#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chronocast/neural.hpp"
#include "chronocast/training.hpp"
#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace chronocast;
using namespace chronocast::neural;

namespace {

// Layer-by-layer evaluation with explicit loops over the flat parameter layout.
double naive_forward(const DenseNet &net, std::span<const double> x) {
	const auto p = net.parameters();
	std::vector<double> a(x.begin(), x.end());
	std::size_t off = 0;
	for (const auto &l : net.layers()) {
		std::vector<double> z(l.fan_out);
		for (std::size_t o = 0; o < l.fan_out; ++o) {
			double s = p[off + l.fan_in * l.fan_out + o];
			for (std::size_t i = 0; i < l.fan_in; ++i) {
				s += p[off + o * l.fan_in + i] * a[i];
			}
			switch (l.activation) {
			case Activation::Linear: z[o] = s; break;
			case Activation::Relu: z[o] = s > 0 ? s : 0; break;
			case Activation::Sigmoid: z[o] = 1 / (1 + std::exp(-s)); break;
			case Activation::Tanh: z[o] = std::tanh(s); break;
			}
		}
		off += l.fan_in * l.fan_out + l.fan_out;
		a = z;
	}
	return a[0];
}

Dataset linear_dataset(std::size_t n, std::uint64_t seed) {
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u(0, 1);
	Dataset d{Matrix(n, 3), std::vector<double>(n)};
	for (std::size_t r = 0; r < n; ++r) {
		for (std::size_t c = 0; c < 3; ++c) {
			d.inputs(r, c) = u(rng);
		}
		d.targets[r] = 0.2 * d.inputs(r, 0) + 0.3 * d.inputs(r, 1) + 0.4 * d.inputs(r, 2) + 0.05;
	}
	return d;
}

} // namespace

TEST_CASE("activations") {
	CHECK(activate(Activation::Relu, -1.0) == 0.0);
	CHECK(activate(Activation::Relu, 2.0) == 2.0);
	CHECK(activate(Activation::Sigmoid, 0.0) == 0.5);
	CHECK(activate_derivative(Activation::Sigmoid, 0.0) == 0.25);
	CHECK(activate_derivative(Activation::Tanh, 0.0) == 1.0);
	CHECK(activate_derivative(Activation::Relu, -0.5) == 0.0);
	CHECK(parse_activation("tanh") == Activation::Tanh);
	CHECK_FALSE(parse_activation("gelu"));
	CHECK(to_string(Activation::Relu) == "relu");
}

TEST_CASE("hand-set networks") {
	DenseNet zero = DenseNet::feed_forward(3, 12, 1);
	std::fill(zero.parameters().begin(), zero.parameters().end(), 0.0);
	CHECK(zero.predict(std::vector<double>{0.3, -2, 7}) == 0.0);

	DenseNet affine({{1, 1, Activation::Linear}}, 1);
	affine.parameters()[0] = 2.0;
	affine.parameters()[1] = 1.0;
	CHECK(affine.predict(std::vector<double>{3.0}) == 7.0);
}

TEST_CASE("shapes and parameter count") {
	const DenseNet net = DenseNet::feed_forward(3, 12, 42);
	CHECK(net.parameter_count() == 217);
	CHECK(net.input_width() == 3);
	CHECK_THROWS(net.forward(Matrix(2, 4)));
	CHECK_THROWS(DenseNet({{3, 4, Activation::Relu}, {5, 1, Activation::Linear}}, 1));
	CHECK_THROWS(DenseNet({}, 1));
	const Matrix out = net.forward(Matrix(5, 3, 0.1));
	CHECK(out.rows() == 5);
	CHECK(out.cols() == 1);
}

TEST_CASE("forward pass matches the loop oracle") {
	std::mt19937_64 rng(3);
	for (Activation act : {Activation::Relu, Activation::Tanh, Activation::Sigmoid}) {
		const DenseNet net({{3, 12, act}, {12, 12, act}, {12, 1, Activation::Linear}}, 99);
		const Matrix x = oracle::random_matrix(rng, 40, 3);
		const Matrix out = net.forward(x);
		for (std::size_t r = 0; r < x.rows(); ++r) {
			CHECK(out(r, 0) == doctest::Approx(naive_forward(net, x.row(r))).epsilon(1e-12));
			CHECK(net.predict(x.row(r)) == out(r, 0));
		}
	}
}

TEST_CASE("backpropagation matches finite differences") {
	std::mt19937_64 rng(17);
	for (Activation act : {Activation::Relu, Activation::Tanh, Activation::Sigmoid}) {
		DenseNet net({{3, 12, act}, {12, 12, act}, {12, 1, Activation::Linear}}, 5);
		const Matrix x = oracle::random_matrix(rng, 8, 3);
		const Matrix w = oracle::random_matrix(rng, 8, 1);
		const auto pg = oracle::check_parameter_gradients(net, x, w);
		CHECK_MESSAGE(pg.failures == 0, "worst param index " << pg.worst_index << " rel " << pg.worst_rel);
		const auto ig = oracle::check_input_gradients(net, x, w);
		CHECK(ig.failures == 0);
	}
}

TEST_CASE("stale caches are rejected") {
	DenseNet net = DenseNet::feed_forward(3, 4, 1);
	DenseNet::Cache cache;
	net.forward(Matrix(2, 3, 0.5), &cache);
	CHECK_NOTHROW(net.backward(cache, Matrix(2, 1, 1.0)));
	net.parameters()[0] += 0.1;
	CHECK_THROWS_AS(net.backward(cache, Matrix(2, 1, 1.0)), std::logic_error);
	net.forward(Matrix(2, 3, 0.5), &cache);
	CHECK_THROWS_AS(net.backward(cache, Matrix(3, 1, 1.0)), std::invalid_argument);
}

TEST_CASE("initialization is seeded") {
	const DenseNet a = DenseNet::feed_forward(3, 12, 7);
	const DenseNet b = DenseNet::feed_forward(3, 12, 7);
	const DenseNet c = DenseNet::feed_forward(3, 12, 8);
	CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
	CHECK_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
	const double limit = std::sqrt(6.0 / 3.0);
	for (std::size_t i = 0; i < 36; ++i) {
		CHECK(std::abs(a.parameters()[i]) <= limit);
	}
	for (std::size_t i = 36; i < 48; ++i) {
		CHECK(a.parameters()[i] == 0.0);
	}
}

TEST_CASE("Adam") {
	const AdamConfig cfg;
	std::vector<double> p{1.0, -2.0, 0.5};
	AdamState st(3);
	adam_step(p, std::vector<double>{0.3, -4.0, 0.0}, st, cfg);
	CHECK(p[0] == doctest::Approx(1.0 - cfg.learning_rate).epsilon(1e-6));
	CHECK(p[1] == doctest::Approx(-2.0 + cfg.learning_rate).epsilon(1e-6));
	CHECK(p[2] == 0.5);
	CHECK(st.step == 1);

	std::vector<double> w{3.0};
	AdamState sw(1);
	AdamConfig fast;
	fast.learning_rate = 0.1;
	for (int k = 0; k < 200; ++k) {
		adam_step(w, std::vector<double>{2.0 * w[0]}, sw, fast);
	}
	CHECK(std::abs(w[0]) < 0.05);
	CHECK_THROWS(adam_step(w, std::vector<double>{1, 2}, sw, fast));
}

TEST_CASE("training config validation") {
	TrainConfig cfg;
	CHECK_NOTHROW(validate_train_config(cfg));
	cfg.epochs = 0;
	CHECK_THROWS(validate_train_config(cfg));
	cfg = {};
	cfg.batch_size = 0;
	CHECK_THROWS(validate_train_config(cfg));
	cfg = {};
	cfg.adam.learning_rate = -1;
	CHECK_THROWS(validate_train_config(cfg));
}

TEST_CASE("learns a linear target") {
	const Dataset train_set = linear_dataset(400, 1);
	const Dataset val_set = linear_dataset(100, 2);
	DenseNet net = DenseNet::feed_forward(3, 12, 42);
	TrainConfig cfg;
	cfg.epochs = 400;
	cfg.adam.learning_rate = 3e-3;
	const auto res = train(net, train_set, val_set, cfg);
	CHECK(res.best_validation_mse < 1e-4);
	CHECK(res.history.size() == 400);
}

TEST_CASE("memorizes a small set") {
	const Dataset d = linear_dataset(8, 3);
	Dataset odd = d;
	for (std::size_t i = 0; i < odd.size(); ++i) {
		odd.targets[i] = (i % 2 == 0) ? 0.9 : 0.1;
	}
	DenseNet net = DenseNet::feed_forward(3, 16, 4);
	TrainConfig cfg;
	cfg.epochs = 3000;
	cfg.batch_size = 8;
	cfg.adam.learning_rate = 1e-2;
	train(net, odd, Dataset{}, cfg);
	const auto pred = predict_rows(net, odd.inputs);
	CHECK(mean_squared_error(pred, odd.targets) < 1e-3);
}

TEST_CASE("best-validation checkpoint is restored") {
	const Dataset train_set = linear_dataset(200, 5);
	const Dataset val_set = linear_dataset(50, 6);
	DenseNet net = DenseNet::feed_forward(3, 12, 9);
	TrainConfig cfg;
	cfg.epochs = 60;
	const auto res = train(net, train_set, val_set, cfg);
	const auto best = std::min_element(res.history.begin(), res.history.end(),
	                                   [](const auto &a, const auto &b) { return a.validation_mse < b.validation_mse; });
	CHECK(res.best_epoch == best->epoch);
	CHECK(res.best_validation_mse == best->validation_mse);
	const auto pred = predict_rows(net, val_set.inputs);
	CHECK(mean_squared_error(pred, val_set.targets) == doctest::Approx(res.best_validation_mse).epsilon(1e-12));
	for (std::size_t k = 0; k < res.history.size(); ++k) {
		CHECK(res.history[k].epoch == static_cast<int>(k + 1));
	}
}

TEST_CASE("training is deterministic for fixed seeds") {
	const Dataset train_set = linear_dataset(120, 7);
	const Dataset val_set = linear_dataset(30, 8);
	TrainConfig cfg;
	cfg.epochs = 30;
	DenseNet a = DenseNet::feed_forward(3, 12, 11);
	DenseNet b = DenseNet::feed_forward(3, 12, 11);
	const auto ra = train(a, train_set, val_set, cfg);
	const auto rb = train(b, train_set, val_set, cfg);
	CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
	CHECK(ra.best_epoch == rb.best_epoch);
	cfg.shuffle_seed = 43;
	DenseNet c = DenseNet::feed_forward(3, 12, 11);
	train(c, train_set, val_set, cfg);
	CHECK_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
}

TEST_CASE("empty training set") {
	DenseNet net = DenseNet::feed_forward(3, 4, 1);
	CHECK_THROWS_AS(train(net, Dataset{}, Dataset{}, TrainConfig{}), ModelError);
}

TEST_CASE("recursive forecasting") {
	const DenseNet net = DenseNet::feed_forward(3, 12, 21);
	const std::vector<double> seed{0.2, 0.4, 0.5};
	const auto one = forecast_recursive(net, seed, 1);
	REQUIRE(one.size() == 1);
	CHECK(one[0] == net.predict(seed));
	const auto five = forecast_recursive(net, seed, 5);
	REQUIRE(five.size() == 5);
	std::vector<double> window = seed;
	for (std::size_t h = 0; h < 5; ++h) {
		const double next = net.predict(window);
		CHECK(five[h] == next);
		window = {window[1], window[2], next};
	}
}
