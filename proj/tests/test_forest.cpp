#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chronocast/error.hpp"
#include "chronocast/forest.hpp"
#include "chronocast/metrics.hpp"
#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace chronocast;
using namespace chronocast::forest;

namespace {

struct Split {
	std::size_t feature = 0;
	double threshold = 0;
	double sse = INFINITY;
};

// Tries every feature and every midpoint, summing squared errors from scratch.
Split exhaustive_best_split(const Matrix &x, std::span<const double> y) {
	Split best;
	for (std::size_t f = 0; f < x.cols(); ++f) {
		std::set<double> distinct;
		for (std::size_t r = 0; r < x.rows(); ++r) {
			distinct.insert(x(r, f));
		}
		for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it) {
			const double thr = (*it + *std::next(it)) / 2;
			double sl = 0, sr = 0;
			int nl = 0, nr = 0;
			for (std::size_t r = 0; r < x.rows(); ++r) {
				(x(r, f) <= thr ? sl : sr) += y[r];
				++(x(r, f) <= thr ? nl : nr);
			}
			const double ml = sl / nl, mr = sr / nr;
			double sse = 0;
			for (std::size_t r = 0; r < x.rows(); ++r) {
				const double m = x(r, f) <= thr ? ml : mr;
				sse += (y[r] - m) * (y[r] - m);
			}
			if (sse < best.sse - 1e-12) {
				best = {f, thr, sse};
			}
		}
	}
	return best;
}

void friedman_like(std::size_t n, std::uint64_t seed, Matrix &x, std::vector<double> &y) {
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u(-3, 3);
	x = Matrix(n, 2);
	y.resize(n);
	for (std::size_t r = 0; r < n; ++r) {
		x(r, 0) = u(rng);
		x(r, 1) = u(rng);
		y[r] = std::sin(x(r, 0)) + 0.5 * x(r, 1);
	}
}

std::size_t count_reachable(const RegressionTree &t, std::size_t id = 0) {
	const auto &n = t.nodes[id];
	return n.leaf ? 1 : 1 + count_reachable(t, n.left) + count_reachable(t, n.right);
}

} // namespace

TEST_CASE("degenerate trees are single leaves") {
	std::mt19937_64 rng(1);
	const Matrix x(5, 2, 1.0);
	const std::vector<double> same(5, 3.5);
	const auto t = fit_tree(x, same, rng, {});
	CHECK(t.nodes.size() == 1);
	CHECK(t.nodes[0].leaf);
	CHECK(t.nodes[0].value == 3.5);
	CHECK(t.depth == 0);

	Matrix one(1, 3);
	one(0, 1) = 2;
	const auto t1 = fit_tree(one, std::vector<double>{7.0}, rng, {});
	CHECK(t1.nodes.size() == 1);
	CHECK(t1.predict(std::vector<double>{9, 9, 9}) == 7.0);

	Matrix varied(4, 1);
	for (std::size_t r = 0; r < 4; ++r) {
		varied(r, 0) = static_cast<double>(r);
	}
	const auto t2 = fit_tree(varied, std::vector<double>{1, 1, 1, 1}, rng, {});
	CHECK(t2.nodes.size() == 1);
	CHECK_THROWS_AS(fit_tree(Matrix(0, 2), std::vector<double>{}, rng, {}), ModelError);
}

TEST_CASE("step function splits at the midpoint") {
	std::mt19937_64 rng(1);
	Matrix x(4, 1);
	for (std::size_t r = 0; r < 4; ++r) {
		x(r, 0) = static_cast<double>(r);
	}
	const std::vector<double> y{0, 0, 1, 1};
	const auto t = fit_tree(x, y, rng, {});
	REQUIRE_FALSE(t.nodes[0].leaf);
	CHECK(t.nodes[0].threshold == 1.5);
	CHECK(t.nodes[0].feature == 0);
	CHECK(t.nodes.size() == 3);
	CHECK(t.predict(std::vector<double>{1.5}) == 0.0);
	CHECK(t.predict(std::vector<double>{1.50001}) == 1.0);
	const auto ex = exhaustive_best_split(x, y);
	CHECK(ex.threshold == 1.5);
}

TEST_CASE("root split agrees with the exhaustive search") {
	std::mt19937_64 data_rng(4);
	std::uniform_int_distribution<int> grid(0, 9);
	std::normal_distribution<double> noise(0, 1);
	for (int trial = 0; trial < 50; ++trial) {
		Matrix x(30, 3);
		std::vector<double> y(30);
		for (std::size_t r = 0; r < 30; ++r) {
			for (std::size_t c = 0; c < 3; ++c) {
				x(r, c) = grid(data_rng);
			}
			y[r] = x(r, trial % 3) + noise(data_rng);
		}
		std::mt19937_64 rng(1);
		const auto t = fit_tree(x, y, rng, TreeConfig{1, 0, 1});
		const auto ex = exhaustive_best_split(x, y);
		REQUIRE_FALSE(t.nodes[0].leaf);
		CHECK(t.nodes[0].feature == ex.feature);
		CHECK(t.nodes[0].threshold == ex.threshold);
	}
}

TEST_CASE("ties prefer the lowest feature") {
	std::mt19937_64 rng(1);
	Matrix x(4, 2);
	for (std::size_t r = 0; r < 4; ++r) {
		x(r, 0) = static_cast<double>(r);
		x(r, 1) = static_cast<double>(r);
	}
	const auto t = fit_tree(x, std::vector<double>{0, 0, 1, 1}, rng, {});
	CHECK(t.nodes[0].feature == 0);
}

TEST_CASE("tree structure invariants") {
	Matrix x;
	std::vector<double> y;
	friedman_like(500, 3, x, y);
	std::mt19937_64 rng(5);
	const auto t = fit_tree(x, y, rng, TreeConfig{8, 0, 3});
	CHECK(t.depth <= 8);
	CHECK(count_reachable(t) == t.nodes.size());
	for (std::size_t id = 0; id < t.nodes.size(); ++id) {
		if (!t.nodes[id].leaf) {
			CHECK(t.nodes[id].left > id);
			CHECK(t.nodes[id].right > t.nodes[id].left);
		}
	}
	// min_leaf: each leaf is reached by at least 3 training rows
	std::vector<int> hits(t.nodes.size(), 0);
	for (std::size_t r = 0; r < x.rows(); ++r) {
		std::size_t id = 0;
		while (!t.nodes[id].leaf) {
			id = x(r, t.nodes[id].feature) <= t.nodes[id].threshold ? t.nodes[id].left : t.nodes[id].right;
		}
		++hits[id];
	}
	for (std::size_t id = 0; id < t.nodes.size(); ++id) {
		if (t.nodes[id].leaf) {
			CHECK(hits[id] >= 3);
		}
	}
}

TEST_CASE("deeper trees never fit the training data worse") {
	Matrix x;
	std::vector<double> y;
	friedman_like(400, 8, x, y);
	double previous = INFINITY;
	for (std::size_t depth = 1; depth <= 20; ++depth) {
		std::mt19937_64 rng(1);
		const auto t = fit_tree(x, y, rng, TreeConfig{depth, 0, 1});
		double sse = 0;
		for (std::size_t r = 0; r < x.rows(); ++r) {
			const double e = t.predict(x.row(r)) - y[r];
			sse += e * e;
		}
		CHECK(sse <= previous + 1e-12);
		previous = sse;
	}
	CHECK(previous < 1e-20);
}

TEST_CASE("forest is deterministic and independent of threading") {
	Matrix x;
	std::vector<double> y;
	friedman_like(300, 1, x, y);
	ForestConfig cfg;
	cfg.n_estimators = 20;
	const auto a = fit_forest(x, y, cfg);
	const auto b = fit_forest(x, y, cfg);
	cfg.parallel = false;
	const auto c = fit_forest(x, y, cfg);
	REQUIRE(a.trees.size() == 20);
	for (std::size_t k = 0; k < 20; ++k) {
		CHECK(a.trees[k] == b.trees[k]);
		CHECK(a.trees[k] == c.trees[k]);
	}
	cfg.random_state = 3;
	const auto d = fit_forest(x, y, cfg);
	CHECK_FALSE(a.trees[0] == d.trees[0]);
	CHECK(tree_seed(2, 0) != tree_seed(2, 1));
	CHECK(tree_seed(2, 0) != tree_seed(3, 0));
}

TEST_CASE("constant targets give a constant forest") {
	Matrix x;
	std::vector<double> y;
	friedman_like(100, 2, x, y);
	std::fill(y.begin(), y.end(), 4.25);
	ForestConfig cfg;
	cfg.n_estimators = 10;
	const auto f = fit_forest(x, y, cfg);
	CHECK(f.predict(std::vector<double>{100, -100}) == 4.25);
}

TEST_CASE("forest prediction is the mean of the trees") {
	Matrix x;
	std::vector<double> y;
	friedman_like(200, 9, x, y);
	ForestConfig cfg;
	cfg.n_estimators = 25;
	const auto f = fit_forest(x, y, cfg);
	std::mt19937_64 rng(1);
	const Matrix q = oracle::random_matrix(rng, 50, 2, -4, 4);
	for (std::size_t r = 0; r < q.rows(); ++r) {
		double s = 0;
		for (const auto &t : f.trees) {
			s += t.predict(q.row(r));
		}
		const double p = f.predict(q.row(r));
		CHECK(p == doctest::Approx(s / 25.0).epsilon(1e-14));
		CHECK(p >= f.target_min);
		CHECK(p <= f.target_max);
	}
	CHECK(f.target_min == *std::min_element(y.begin(), y.end()));
	CHECK(f.target_max == *std::max_element(y.begin(), y.end()));
	CHECK_THROWS(f.predict(std::vector<double>{1, 2, 3}));
}

TEST_CASE("bootstrap covers about 63% of the rows") {
	Matrix x;
	std::vector<double> y;
	friedman_like(2000, 6, x, y);
	ForestConfig cfg;
	cfg.n_estimators = 50;
	cfg.tree.max_depth = 2;
	const auto f = fit_forest(x, y, cfg);
	REQUIRE(f.bootstrap_unique_fraction.size() == 50);
	for (double u : f.bootstrap_unique_fraction) {
		CHECK(u >= 0.60);
		CHECK(u <= 0.67);
	}
}

TEST_CASE("fits a smooth surface out of sample") {
	Matrix x, xt;
	std::vector<double> y, yt;
	friedman_like(2000, 10, x, y);
	friedman_like(500, 11, xt, yt);
	const auto f = fit_forest(x, y, ForestConfig{});
	std::vector<double> pred(yt.size());
	for (std::size_t r = 0; r < xt.rows(); ++r) {
		pred[r] = f.predict(xt.row(r));
	}
	const auto r = evaluate(yt, pred);
	REQUIRE(r.r2);
	CHECK(*r.r2 > 0.95);
}

TEST_CASE("feature subsampling") {
	Matrix x;
	std::vector<double> y;
	friedman_like(300, 12, x, y);
	ForestConfig cfg;
	cfg.n_estimators = 10;
	cfg.tree.m_try = 1;
	const auto f = fit_forest(x, y, cfg);
	CHECK(f.trees.size() == 10);
	CHECK_THROWS_AS(fit_forest(Matrix(0, 2), std::vector<double>{}, cfg), ModelError);
}
