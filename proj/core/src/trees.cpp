#include "m2m/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace m2m {

double TreeModel::predict_row(std::span<const double> x) const {
  if (x.size() != p) throw std::runtime_error("tree predict: feature count mismatch");
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                     : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

std::vector<double> TreeModel::predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
  return out;
}

int TreeModel::n_leaves() const {
  int k = 0;
  for (const auto& node : nodes) k += node.feature < 0;
  return k;
}

namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

double node_sse(double sum, double sum_sq, double m) { return sum_sq - sum * sum / m; }

Split best_split(const Matrix& x, std::span<const double> y,
                 std::span<const int> rows, int min_leaf,
                 std::vector<int>& scratch) {
  const auto m = static_cast<double>(rows.size());
  double sum = 0.0, sum_sq = 0.0;
  for (int i : rows) {
    sum += y[static_cast<std::size_t>(i)];
    sum_sq += y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  }
  const double parent = node_sse(sum, sum_sq, m);

  Split best;
  if (rows.size() < 2 * static_cast<std::size_t>(min_leaf)) return best;
  scratch.assign(rows.begin(), rows.end());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    std::sort(scratch.begin(), scratch.end(), [&](int a, int b) {
      const double va = x(static_cast<std::size_t>(a), j);
      const double vb = x(static_cast<std::size_t>(b), j);
      return va != vb ? va < vb : a < b;
    });
    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t k = 0; k + 1 < scratch.size(); ++k) {
      const double yk = y[static_cast<std::size_t>(scratch[k])];
      left_sum += yk;
      left_sq += yk * yk;
      const std::size_t n_left = k + 1;
      const std::size_t n_right = scratch.size() - n_left;
      if (n_left < static_cast<std::size_t>(min_leaf)) continue;
      if (n_right < static_cast<std::size_t>(min_leaf)) break;
      const double vk = x(static_cast<std::size_t>(scratch[k]), j);
      const double vnext = x(static_cast<std::size_t>(scratch[k + 1]), j);
      if (vk == vnext) continue;  // cannot separate equal values
      const double gain = parent -
                          node_sse(left_sum, left_sq, static_cast<double>(n_left)) -
                          node_sse(sum - left_sum, sum_sq - left_sq,
                                   static_cast<double>(n_right));
      // Strict > keeps the first (lowest feature, lowest threshold) on ties.
      if (gain > best.gain) {
        best.found = true;
        best.feature = j;
        best.threshold = vk + (vnext - vk) / 2.0;
        best.gain = gain;
      }
    }
  }
  return best;
}

int grow(TreeModel& tree, const Matrix& x, std::span<const double> y,
         std::vector<int>& rows, int depth, const TreeConfig& cfg,
         std::vector<int>& scratch) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  double mean = 0.0;
  for (int i : rows) mean += y[static_cast<std::size_t>(i)];
  mean /= static_cast<double>(rows.size());
  tree.nodes[static_cast<std::size_t>(id)].value = mean;

  if (depth >= cfg.max_depth) return id;
  const Split split = best_split(x, y, rows, cfg.min_leaf, scratch);
  if (!split.found) return id;

  std::vector<int> left, right;
  for (int i : rows) {
    if (x(static_cast<std::size_t>(i), split.feature) <= split.threshold)
      left.push_back(i);
    else
      right.push_back(i);
  }
  rows.clear();
  rows.shrink_to_fit();

  tree.split_gains[split.feature] += split.gain;
  const int l = grow(tree, x, y, left, depth + 1, cfg, scratch);
  const int r = grow(tree, x, y, right, depth + 1, cfg, scratch);
  TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
  node.feature = static_cast<int>(split.feature);
  node.threshold = split.threshold;
  node.left = l;
  node.right = r;
  return id;
}

}  // namespace

TreeModel fit_tree(const Matrix& x, std::span<const double> y, const TreeConfig& cfg) {
  if (x.rows() != y.size()) throw std::runtime_error("fit_tree: row count mismatch");
  if (x.rows() == 0) throw std::runtime_error("fit_tree: empty design");
  if (cfg.min_leaf < 1) throw std::runtime_error("fit_tree: min_leaf must be positive");
  TreeModel tree;
  tree.p = x.cols();
  tree.split_gains.assign(x.cols(), 0.0);
  std::vector<int> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<int> scratch;
  grow(tree, x, y, rows, 0, cfg, scratch);
  return tree;
}

std::vector<double> tree_importance(const TreeModel& tree) {
  const double total =
      std::accumulate(tree.split_gains.begin(), tree.split_gains.end(), 0.0);
  std::vector<double> imp(tree.split_gains.size(), 0.0);
  if (total <= 0.0) return imp;
  for (std::size_t j = 0; j < imp.size(); ++j) imp[j] = tree.split_gains[j] / total;
  return imp;
}

double BoostedModel::predict_row(std::span<const double> x) const {
  double v = init;
  for (const auto& tree : trees) v += learning_rate * tree.predict_row(x);
  return v;
}

std::vector<double> BoostedModel::predict(const Matrix& x) const {
  std::vector<double> out(x.rows(), init);
  for (const auto& tree : trees) {
    for (std::size_t i = 0; i < x.rows(); ++i)
      out[i] += learning_rate * tree.predict_row(x.row(i));
  }
  return out;
}

std::vector<double> BoostedModel::importance() const {
  if (trees.empty()) return {};
  std::vector<double> gains(trees.front().p, 0.0);
  for (const auto& tree : trees)
    for (std::size_t j = 0; j < gains.size(); ++j) gains[j] += tree.split_gains[j];
  const double total = std::accumulate(gains.begin(), gains.end(), 0.0);
  if (total > 0.0)
    for (double& g : gains) g /= total;
  return gains;
}

BoostedModel fit_gbm(const Matrix& x, std::span<const double> y, const GbmConfig& cfg) {
  if (x.rows() != y.size()) throw std::runtime_error("fit_gbm: row count mismatch");
  if (x.rows() == 0) throw std::runtime_error("fit_gbm: empty design");
  BoostedModel model;
  model.learning_rate = cfg.learning_rate;
  model.init =
      std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  std::vector<double> residual(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - model.init;
  model.trees.reserve(static_cast<std::size_t>(cfg.n_trees));
  for (int s = 0; s < cfg.n_trees; ++s) {
    TreeModel tree = fit_tree(x, residual, cfg.tree);
    for (std::size_t i = 0; i < y.size(); ++i)
      residual[i] -= cfg.learning_rate * tree.predict_row(x.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace m2m
