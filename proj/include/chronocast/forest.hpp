#pragma once

#include "chronocast/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace chronocast::forest {

struct TreeNode {
	bool leaf = true;
	std::size_t feature = 0;
	double threshold = 0;  // go left when x[feature] <= threshold
	std::size_t left = 0;
	std::size_t right = 0;
	double value = 0;  // leaf mean

	bool operator==(const TreeNode &) const = default;
};

struct RegressionTree {
	std::vector<TreeNode> nodes;  // nodes[0] is the root
	std::size_t depth = 0;        // deepest level reached, root at 0

	double predict(std::span<const double> x) const;
	bool operator==(const RegressionTree &) const = default;
};

struct TreeConfig {
	std::optional<std::size_t> max_depth = 20;  // nullopt: grow until pure or min_leaf
	std::size_t m_try = 0;                      // 0 or >= feature count: all features
	std::size_t min_leaf = 1;
};

/// CART regression tree on squared error. Candidate thresholds are midpoints between consecutive
/// distinct values; ties go to the lowest feature index, then the smallest threshold.
RegressionTree fit_tree(const Matrix &samples, std::span<const double> targets, std::mt19937_64 &rng,
                        const TreeConfig &cfg);

struct ForestConfig {
	std::size_t n_estimators = 100;
	TreeConfig tree;
	std::uint64_t random_state = 2;
	bool parallel = true;
};

struct ForestModel {
	std::vector<RegressionTree> trees;
	std::size_t n_features = 0;
	ForestConfig config;
	std::vector<double> bootstrap_unique_fraction;  // per tree
	double target_min = 0;
	double target_max = 0;

	double predict(std::span<const double> x) const;
};

/// Seed of tree k's private stream.
std::uint64_t tree_seed(std::uint64_t master, std::size_t k);

ForestModel fit_forest(const Matrix &samples, std::span<const double> targets, const ForestConfig &cfg);

} // namespace chronocast::forest
