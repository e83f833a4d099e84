#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m2m/lasso.hpp"
#include "m2m/matrix.hpp"
#include "m2m/trees.hpp"

namespace m2m {

enum class MetricSource {
  lcm,
  metalearner_arm0,
  metalearner_arm1,
  tree,
  feature_select,
  oracle,
  uniform,
};

std::string to_string(MetricSource s);

/// Diagonal metric for the weighted Manhattan distance
///   d(a, b) = sum_l weights[l] * |a_l - b_l|.
/// Weights are learned on the standardized covariate scale.
struct DistanceMetric {
  std::vector<double> weights;  // nonnegative, finite
  MetricSource source = MetricSource::uniform;
  int fold = -1;                // training fold the weights came from, -1 if none
  std::string model_summary;    // human-readable note on the fitted models

  /// Indices with strictly positive weight, ascending. Matching and the
  /// in-group linear estimator only ever touch these columns.
  std::vector<int> active_columns() const;
  double weight_sum() const;
};

/// Outcome-coefficient metric: one L1-penalized linear model per treatment
/// arm (penalty chosen by cross-validation), each arm's |coefficients|
/// normalized to unit L1 norm, contributions averaged across the arms that
/// produced a nonzero fit. Falls back to uniform weights (with a warning)
/// when both arms shrink to zero.
DistanceMetric learn_lcm_metric(const Matrix& x, std::span<const double> y,
                                std::span<const int> t, const LassoConfig& cfg,
                                std::uint64_t seed);

/// Per-arm variant: arm t' gets its own metric, the normalized
/// |coefficients| of that arm's model alone. Arm-t' neighbors are then
/// found under metric t'.
std::array<DistanceMetric, 2> learn_metalearner_metrics(const Matrix& x,
                                                        std::span<const double> y,
                                                        std::span<const int> t,
                                                        const LassoConfig& cfg,
                                                        std::uint64_t seed);

/// Same averaging scheme with per-arm regression-tree split-gain
/// importances in place of normalized |coefficients|.
DistanceMetric learn_tree_metric(const Matrix& x, std::span<const double> y,
                                 std::span<const int> t, const TreeConfig& cfg);

/// Binarize: weight 1 wherever the input weight is positive, 0 elsewhere.
/// Turns a learned metric into a pure feature selector.
DistanceMetric feature_select_metric(const DistanceMetric& m);

/// Indicator weights on a known-important support.
DistanceMetric oracle_metric(std::span<const int> support, std::size_t p);

/// Equal weight 1/p everywhere.
DistanceMetric uniform_metric(std::size_t p);

}  // namespace m2m
