#include "rvae/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rvae/error.hpp"
#include "rvae/parallel.hpp"
#include "rvae/rng.hpp"

namespace rvae {

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

double ForestModel::predict(std::span<const double> x) const {
  if (trees.empty()) throw UsageError("ForestModel::predict on an empty forest");
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x);
  return s / static_cast<double>(trees.size());
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const ForestParams& p, Rng rng)
      : x_(x), y_(y), p_(p), rng_(rng) {}

  RegressionTree build(std::vector<std::size_t> samples) {
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  int grow(std::vector<std::size_t>& samples, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (std::size_t s : samples) sum += y_[s];
    const double mean = sum / static_cast<double>(samples.size());
    {
      TreeNode& node = tree_.nodes.back();
      node.value = mean;
      node.samples = samples.size();
      node.depth = depth;
    }
    if (depth >= p_.max_depth || samples.size() < 2 * p_.min_leaf) return id;

    const Split split = best_split(samples);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t s : samples) {
      (x_(s, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& samples) {
    const std::size_t p = x_.cols();
    const std::size_t m = std::min(p_.features_per_split, p);
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(p - i));
      std::swap(features[i], features[j]);
    }

    const std::size_t n = samples.size();
    double total = 0.0;
    for (std::size_t s : samples) total += y_[s];
    const double parent_score = total * total / static_cast<double>(n);

    Split best;
    std::vector<std::size_t> order = samples;
    for (std::size_t fi = 0; fi < m; ++fi) {
      const std::size_t f = features[fi];
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double xa = x_(a, f), xb = x_(b, f);
        return xa < xb || (xa == xb && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        left_sum += y_[order[i - 1]];
        const double lo = x_(order[i - 1], f);
        const double hi = x_(order[i], f);
        if (i < p_.min_leaf || n - i < p_.min_leaf || !(lo < hi)) continue;
        const double nl = static_cast<double>(i);
        const double nr = static_cast<double>(n - i);
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_score;
        if (gain > best.gain + 1e-12 * std::abs(parent_score)) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          best.threshold = lo + 0.5 * (hi - lo);
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const ForestParams& p_;
  Rng rng_;
  RegressionTree tree_;
};

}  // namespace

ForestModel forest_fit(const Matrix& x, std::span<const double> y, const ForestParams& params, std::size_t threads) {
  if (y.size() != x.rows()) throw ConfigError("forest_fit: X rows and y length differ");
  if (params.n_trees == 0) throw ConfigError("forest_fit: n_trees must be positive");
  if (params.min_leaf == 0) throw ConfigError("forest_fit: min_leaf must be positive");
  if (params.features_per_split == 0) throw ConfigError("forest_fit: features_per_split must be positive");
  if (x.rows() < params.min_leaf) throw ValidationError("forest_fit: fewer samples than min_leaf");

  ForestModel model;
  model.params = params;
  model.trees.resize(params.n_trees);
  parallel_for(
      params.n_trees,
      [&](std::size_t t) {
        Rng rng = Rng::derive(params.seed, {t});
        std::vector<std::size_t> samples(x.rows());
        if (params.bootstrap) {
          for (auto& s : samples) s = static_cast<std::size_t>(rng.below(x.rows()));
        } else {
          std::iota(samples.begin(), samples.end(), 0);
        }
        model.trees[t] = TreeBuilder(x, y, params, rng).build(std::move(samples));
      },
      threads);
  return model;
}

}  // namespace rvae
