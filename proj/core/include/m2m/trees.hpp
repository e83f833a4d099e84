#pragma once

#include <span>
#include <vector>

#include "m2m/matrix.hpp"

namespace m2m {

/// Greedy binary regression tree grown by sum-of-squares reduction.
struct TreeConfig {
  int max_depth = 3;
  int min_leaf = 5;
};

struct TreeNode {
  int feature = -1;   // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold routes left
  int left = -1;
  int right = -1;
  double value = 0.0;      // mean response at the node
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t p = 0;
  /// Total SSE decrease contributed by splits on each feature.
  std::vector<double> split_gains;

  double predict_row(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& x) const;
  int n_leaves() const;
};

/// Splits maximize the SSE decrease; candidates are midpoints between
/// consecutive distinct values. A split must leave min_leaf rows on each
/// side and strictly decrease the SSE; ties prefer the lowest feature
/// index, then the lowest threshold, so fits are deterministic.
TreeModel fit_tree(const Matrix& x, std::span<const double> y, const TreeConfig& cfg = {});

/// Per-feature share of the total split gain; sums to 1, or is all zeros
/// for a stump that never split.
std::vector<double> tree_importance(const TreeModel& tree);

/// Stagewise least-squares boosting: start from the response mean, then
/// repeatedly fit a shallow tree to the current residuals and move a
/// learning_rate step toward it.
struct GbmConfig {
  int n_trees = 100;
  double learning_rate = 0.1;
  TreeConfig tree{3, 5};
};

struct BoostedModel {
  double init = 0.0;
  double learning_rate = 0.1;
  std::vector<TreeModel> trees;

  double predict_row(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& x) const;
  /// Split gains summed across all stages, normalized to 1.
  std::vector<double> importance() const;
};

BoostedModel fit_gbm(const Matrix& x, std::span<const double> y, const GbmConfig& cfg = {});

}  // namespace m2m
