#include "chronocast/forest.hpp"

#include "chronocast/error.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace chronocast::forest {

double RegressionTree::predict(std::span<const double> x) const {
	std::size_t n = 0;
	while (!nodes.at(n).leaf) {
		const TreeNode &node = nodes[n];
		n = x[node.feature] <= node.threshold ? node.left : node.right;
	}
	return nodes[n].value;
}

namespace {

struct Split {
	std::size_t feature = 0;
	double threshold = 0;
	double sse = 0;
};

class Builder {
public:
	Builder(const Matrix &x, std::span<const double> y, std::mt19937_64 &rng, const TreeConfig &cfg)
	    : x_(x), y_(y), rng_(rng), cfg_(cfg) {}

	RegressionTree build() {
		std::vector<std::size_t> idx(y_.size());
		std::iota(idx.begin(), idx.end(), 0);
		grow(idx, 0);
		return std::move(tree_);
	}

private:
	std::size_t grow(std::vector<std::size_t> &idx, std::size_t depth) {
		const std::size_t id = tree_.nodes.size();
		tree_.nodes.emplace_back();
		tree_.depth = std::max(tree_.depth, depth);

		double sum = 0;
		for (std::size_t i : idx) {
			sum += y_[i];
		}
		const double mean = sum / static_cast<double>(idx.size());
		bool pure = true;
		for (std::size_t i : idx) {
			if (y_[i] != y_[idx.front()]) {
				pure = false;
				break;
			}
		}
		tree_.nodes[id].value = pure ? y_[idx.front()] : mean;
		const bool depth_ok = !cfg_.max_depth || depth < *cfg_.max_depth;
		if (pure || !depth_ok || idx.size() < 2 * cfg_.min_leaf) {
			return id;
		}
		const auto split = best_split(idx);
		if (!split) {
			return id;
		}
		std::vector<std::size_t> left, right;
		for (std::size_t i : idx) {
			(x_(i, split->feature) <= split->threshold ? left : right).push_back(i);
		}
		idx.clear();
		idx.shrink_to_fit();
		const std::size_t l = grow(left, depth + 1);
		const std::size_t r = grow(right, depth + 1);
		TreeNode &node = tree_.nodes[id];
		node.leaf = false;
		node.feature = split->feature;
		node.threshold = split->threshold;
		node.left = l;
		node.right = r;
		return id;
	}

	std::vector<std::size_t> candidate_features() {
		const std::size_t p = x_.cols();
		std::vector<std::size_t> f(p);
		std::iota(f.begin(), f.end(), 0);
		if (cfg_.m_try == 0 || cfg_.m_try >= p) {
			return f;
		}
		std::shuffle(f.begin(), f.end(), rng_);
		f.resize(cfg_.m_try);
		std::sort(f.begin(), f.end());
		return f;
	}

	std::optional<Split> best_split(const std::vector<std::size_t> &idx) {
		const std::size_t n = idx.size();
		std::optional<Split> best;
		std::vector<std::pair<double, double>> col(n);
		for (std::size_t f : candidate_features()) {
			for (std::size_t k = 0; k < n; ++k) {
				col[k] = {x_(idx[k], f), y_[idx[k]]};
			}
			std::sort(col.begin(), col.end());
			double total = 0, total_sq = 0;
			for (const auto &[v, t] : col) {
				total += t;
				total_sq += t * t;
			}
			double ls = 0, lsq = 0;
			for (std::size_t k = 0; k + 1 < n; ++k) {
				ls += col[k].second;
				lsq += col[k].second * col[k].second;
				if (col[k].first == col[k + 1].first) {
					continue;
				}
				const std::size_t nl = k + 1;
				const std::size_t nr = n - nl;
				if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) {
					continue;
				}
				const double rs = total - ls;
				const double rsq = total_sq - lsq;
				const double sse = (lsq - ls * ls / static_cast<double>(nl)) + (rsq - rs * rs / static_cast<double>(nr));
				// strict improvement keeps the lowest feature and smallest threshold on ties
				if (!best || sse < best->sse) {
					best = Split{f, 0.5 * (col[k].first + col[k + 1].first), sse};
				}
			}
		}
		return best;
	}

	const Matrix &x_;
	std::span<const double> y_;
	std::mt19937_64 &rng_;
	const TreeConfig &cfg_;
	RegressionTree tree_;
};

std::uint64_t splitmix64(std::uint64_t x) {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

} // namespace

RegressionTree fit_tree(const Matrix &samples, std::span<const double> targets, std::mt19937_64 &rng,
                        const TreeConfig &cfg) {
	if (samples.rows() != targets.size()) {
		throw std::invalid_argument("fit_tree: sample and target counts differ");
	}
	if (targets.empty()) {
		throw ModelError("fit_tree: no samples");
	}
	if (cfg.min_leaf < 1) {
		throw std::invalid_argument("fit_tree: min_leaf must be >= 1");
	}
	return Builder(samples, targets, rng, cfg).build();
}

std::uint64_t tree_seed(std::uint64_t master, std::size_t k) {
	return splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(k));
}

double ForestModel::predict(std::span<const double> x) const {
	if (x.size() != n_features) {
		throw std::invalid_argument("ForestModel::predict: expected " + std::to_string(n_features) + " features");
	}
	double s = 0;
	for (const auto &t : trees) {
		s += t.predict(x);
	}
	return s / static_cast<double>(trees.size());
}

ForestModel fit_forest(const Matrix &samples, std::span<const double> targets, const ForestConfig &cfg) {
	if (targets.empty() || samples.rows() == 0) {
		throw ModelError("fit_forest: training set is empty");
	}
	if (samples.rows() != targets.size()) {
		throw std::invalid_argument("fit_forest: sample and target counts differ");
	}
	if (cfg.n_estimators == 0) {
		throw std::invalid_argument("fit_forest: n_estimators must be >= 1");
	}
	const std::size_t n = targets.size();
	ForestModel model;
	model.n_features = samples.cols();
	model.config = cfg;
	model.trees.resize(cfg.n_estimators);
	model.bootstrap_unique_fraction.resize(cfg.n_estimators);
	const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
	model.target_min = *lo;
	model.target_max = *hi;

	auto build = [&](std::size_t k) {
		std::mt19937_64 rng(tree_seed(cfg.random_state, k));
		std::uniform_int_distribution<std::size_t> pick(0, n - 1);
		Matrix xb(n, samples.cols());
		std::vector<double> yb(n);
		std::vector<char> seen(n, 0);
		std::size_t unique = 0;
		for (std::size_t r = 0; r < n; ++r) {
			const std::size_t j = pick(rng);
			unique += seen[j] ? 0 : 1;
			seen[j] = 1;
			const auto src = samples.row(j);
			std::copy(src.begin(), src.end(), xb.row(r).begin());
			yb[r] = targets[j];
		}
		model.bootstrap_unique_fraction[k] = static_cast<double>(unique) / static_cast<double>(n);
		model.trees[k] = fit_tree(xb, yb, rng, cfg.tree);
	};

	const std::size_t workers = cfg.parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1;
	if (workers == 1) {
		for (std::size_t k = 0; k < cfg.n_estimators; ++k) {
			build(k);
		}
		return model;
	}
	std::vector<std::future<void>> jobs;
	for (std::size_t w = 0; w < workers; ++w) {
		jobs.push_back(std::async(std::launch::async, [&, w] {
			for (std::size_t k = w; k < cfg.n_estimators; k += workers) {
				build(k);
			}
		}));
	}
	for (auto &j : jobs) {
		j.get();
	}
	return model;
}

} // namespace chronocast::forest
