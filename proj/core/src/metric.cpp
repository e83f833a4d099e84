#include "m2m/metric.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "m2m/dataset.hpp"

namespace m2m {

std::string to_string(MetricSource s) {
  switch (s) {
    case MetricSource::lcm: return "lcm";
    case MetricSource::metalearner_arm0: return "metalearner_arm0";
    case MetricSource::metalearner_arm1: return "metalearner_arm1";
    case MetricSource::tree: return "tree";
    case MetricSource::feature_select: return "feature_select";
    case MetricSource::oracle: return "oracle";
    case MetricSource::uniform: return "uniform";
  }
  return "unknown";
}

std::vector<int> DistanceMetric::active_columns() const {
  std::vector<int> cols;
  for (std::size_t j = 0; j < weights.size(); ++j)
    if (weights[j] > 0.0) cols.push_back(static_cast<int>(j));
  return cols;
}

double DistanceMetric::weight_sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

namespace {

struct ArmRows {
  Matrix x;
  std::vector<double> y;
  std::size_t n = 0;
};

ArmRows arm_subset(const Matrix& x, std::span<const double> y, std::span<const int> t,
                   int arm) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] == arm) rows.push_back(static_cast<int>(i));
  ArmRows out;
  out.n = rows.size();
  out.x = gather_rows(x, rows);
  out.y = gather_values(y, std::span<const int>(rows));
  return out;
}

/// |coefficients| scaled to unit L1 norm; empty result marks a fully
/// shrunk fit (nothing to contribute).
std::vector<double> normalized_abs(const std::vector<double>& beta) {
  double l1 = 0.0;
  for (double b : beta) l1 += std::abs(b);
  if (l1 == 0.0) return {};
  std::vector<double> w(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) w[j] = std::abs(beta[j]) / l1;
  return w;
}

DistanceMetric average_arm_contributions(std::array<std::vector<double>, 2> contrib,
                                         std::size_t p, MetricSource source,
                                         const std::string& summary,
                                         const char* what) {
  int arms = 0;
  std::vector<double> w(p, 0.0);
  for (int a = 0; a < 2; ++a) {
    if (contrib[a].empty()) {
      warn(std::string(what) + ": arm " + std::to_string(a) +
           " contributed no importance; skipping it");
      continue;
    }
    ++arms;
    for (std::size_t j = 0; j < p; ++j) w[j] += contrib[a][j];
  }
  DistanceMetric m;
  m.model_summary = summary;
  if (arms == 0) {
    warn(std::string(what) + ": no arm contributed; falling back to uniform weights");
    return uniform_metric(p);
  }
  // Averaging over contributing arms keeps the weights summing to 1 even
  // when one arm drops out.
  for (double& v : w) v /= arms;
  m.weights = std::move(w);
  m.source = source;
  return m;
}

}  // namespace

DistanceMetric learn_lcm_metric(const Matrix& x, std::span<const double> y,
                                std::span<const int> t, const LassoConfig& cfg,
                                std::uint64_t seed) {
  const std::size_t p = x.cols();
  std::array<std::vector<double>, 2> contrib;
  std::ostringstream summary;
  for (int a = 0; a < 2; ++a) {
    ArmRows arm = arm_subset(x, y, t, a);
    CvLassoResult cv = cv_lasso(arm.x, arm.y, cfg, seed);
    contrib[a] = normalized_abs(cv.fit.beta);
    if (a) summary << " | ";
    summary << "arm" << a << ": n=" << arm.n << " lambda=" << cv.best_lambda
            << " nnz=" << cv.fit.n_nonzero();
  }
  return average_arm_contributions(std::move(contrib), p, MetricSource::lcm,
                                   summary.str(), "lcm metric");
}

std::array<DistanceMetric, 2> learn_metalearner_metrics(const Matrix& x,
                                                        std::span<const double> y,
                                                        std::span<const int> t,
                                                        const LassoConfig& cfg,
                                                        std::uint64_t seed) {
  const std::size_t p = x.cols();
  std::array<DistanceMetric, 2> out;
  for (int a = 0; a < 2; ++a) {
    ArmRows arm = arm_subset(x, y, t, a);
    CvLassoResult cv = cv_lasso(arm.x, arm.y, cfg, seed);
    std::vector<double> w = normalized_abs(cv.fit.beta);
    std::ostringstream summary;
    summary << "arm" << a << ": n=" << arm.n << " lambda=" << cv.best_lambda
            << " nnz=" << cv.fit.n_nonzero();
    if (w.empty()) {
      warn("metalearner metric: arm " + std::to_string(a) +
           " fully shrunk; falling back to uniform weights");
      out[a] = uniform_metric(p);
    } else {
      out[a].weights = std::move(w);
      out[a].source =
          a == 0 ? MetricSource::metalearner_arm0 : MetricSource::metalearner_arm1;
    }
    out[a].model_summary = summary.str();
  }
  return out;
}

DistanceMetric learn_tree_metric(const Matrix& x, std::span<const double> y,
                                 std::span<const int> t, const TreeConfig& cfg) {
  const std::size_t p = x.cols();
  std::array<std::vector<double>, 2> contrib;
  std::ostringstream summary;
  for (int a = 0; a < 2; ++a) {
    ArmRows arm = arm_subset(x, y, t, a);
    if (arm.n == 0) {
      contrib[a] = {};
      continue;
    }
    TreeModel tree = fit_tree(arm.x, arm.y, cfg);
    std::vector<double> imp = tree_importance(tree);
    double total = 0.0;
    for (double v : imp) total += v;
    contrib[a] = total > 0.0 ? std::move(imp) : std::vector<double>{};
    if (a) summary << " | ";
    summary << "arm" << a << ": n=" << arm.n << " leaves=" << tree.n_leaves();
  }
  return average_arm_contributions(std::move(contrib), p, MetricSource::tree,
                                   summary.str(), "tree metric");
}

DistanceMetric feature_select_metric(const DistanceMetric& m) {
  DistanceMetric out;
  out.weights.assign(m.weights.size(), 0.0);
  out.source = MetricSource::feature_select;
  out.fold = m.fold;
  out.model_summary = m.model_summary;
  bool any = false;
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    if (m.weights[j] > 0.0) {
      out.weights[j] = 1.0;
      any = true;
    }
  }
  if (!any) warn("feature_select metric: input weights all zero; selector is empty");
  return out;
}

DistanceMetric oracle_metric(std::span<const int> support, std::size_t p) {
  if (support.empty()) throw std::runtime_error("oracle_metric: empty support");
  DistanceMetric m;
  m.weights.assign(p, 0.0);
  m.source = MetricSource::oracle;
  for (int j : support) {
    if (j < 0 || static_cast<std::size_t>(j) >= p)
      throw std::runtime_error("oracle_metric: support index " + std::to_string(j) +
                               " out of range for p=" + std::to_string(p));
    m.weights[static_cast<std::size_t>(j)] = 1.0;
  }
  return m;
}

DistanceMetric uniform_metric(std::size_t p) {
  if (p == 0) throw std::runtime_error("uniform_metric: p must be positive");
  DistanceMetric m;
  m.weights.assign(p, 1.0 / static_cast<double>(p));
  m.source = MetricSource::uniform;
  return m;
}

}  // namespace m2m
