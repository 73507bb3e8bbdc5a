#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rvae/matrix.hpp"

namespace rvae {

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 12;
  std::size_t min_leaf = 5;
  std::size_t features_per_split = 5;  // ceil(13 / 3)
  bool bootstrap = true;
  std::uint64_t seed = 42;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the training samples reaching the node
  std::size_t samples = 0;
  std::size_t depth = 0;
};

/// CART regression tree; x[feature] <= threshold goes left.
struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
};

struct ForestModel {
  std::vector<RegressionTree> trees;
  ForestParams params;

  /// Mean of the tree predictions.
  double predict(std::span<const double> x) const;
};

/// Each tree is grown on its own bootstrap sample with an Rng derived from
/// (seed, tree index), so the forest does not depend on the thread count.
ForestModel forest_fit(const Matrix& x, std::span<const double> y, const ForestParams& params,
                       std::size_t threads = 0);

inline double forest_predict(const ForestModel& model, std::span<const double> x) { return model.predict(x); }

}  // namespace rvae
