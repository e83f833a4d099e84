#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m2m/dataset.hpp"
#include "m2m/lasso.hpp"
#include "m2m/matching.hpp"
#include "m2m/metric.hpp"
#include "m2m/trees.hpp"

namespace m2m {

enum class Method {
  lcm,             // shared coefficient metric, weighted-L1 matching
  metalearner,     // per-arm coefficient metrics
  tree,            // split-gain importance metric
  pgm_linear,      // prognostic scores from penalized linear models
  pgm_np,          // prognostic scores from boosted trees
  lap,             // prognostic shortlist refined by the coefficient metric
  feature_select,  // binarized coefficient metric
  oracle,          // indicator metric on a known support
  uniform,         // flat metric baseline
};

enum class EstimatorKind { mean, linear };

std::string to_string(Method m);
std::string to_string(EstimatorKind e);
Method method_from_string(const std::string& s);
EstimatorKind estimator_from_string(const std::string& s);

struct RunConfig {
  Method method = Method::lcm;
  int k = 10;
  int eta = 5;
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::mean;
  // Two-stage matching (Method::lap only).
  int k1 = 25;
  int k2 = 5;
  Method lap_score = Method::pgm_np;  // pgm_linear or pgm_np
  // Known-important columns (Method::oracle only).
  std::vector<int> oracle_support;
  LassoConfig lasso;
  TreeConfig tree;
  GbmConfig gbm;
  int repeats = 1;  // independent fold plans averaged together
  int threads = 1;  // 0 = all hardware threads
};

/// Within-group potential-outcome estimates for one query.
struct PotentialOutcomes {
  double yhat0 = 0.0, yhat1 = 0.0;
  bool has0 = false, has1 = false;
  /// Set when the linear estimator degraded to the group mean (too few
  /// neighbors or a singular in-group design).
  bool fallback0 = false, fallback1 = false;
};

/// Arithmetic mean of neighbor outcomes per arm; an empty arm leaves that
/// side absent.
PotentialOutcomes estimate_po_mean(const MatchedGroup& g, std::span<const double> y);

/// Per arm: least squares of neighbor outcomes on feats[cols[arm]] (plus an
/// intercept, ridge-stabilized), evaluated at the query row. Arms with
/// fewer than |cols|+2 neighbors fall back to the mean, flagged.
PotentialOutcomes estimate_po_linear(const MatchedGroup& g, const Matrix& feats,
                                     const std::array<std::vector<int>, 2>& cols,
                                     std::span<const double> y);

/// Everything one fold-configuration produced, kept for audits and tests.
struct FoldArtifacts {
  int repeat = 0;
  int fold = -1;  // the training fold
  std::vector<int> train_rows;
  std::vector<int> est_rows;
  std::array<DistanceMetric, 2> metrics;  // identical halves unless per-arm
  bool per_arm_metrics = false;
  std::vector<MatchedGroup> groups;  // aligned with est_rows
  int linear_fallbacks = 0;
};

struct UnitEstimate {
  double yhat0 = 0.0, yhat1 = 0.0, cate = 0.0;
  int n0 = 0, n1 = 0;       // fold-configurations contributing each side
  int n_contributions = 0;  // fold-configurations that held the unit

  bool has0() const { return n0 > 0; }
  bool has1() const { return n1 > 0; }
  bool has_cate() const { return n0 > 0 && n1 > 0; }
};

struct StageTimings {
  double learn_s = 0.0;
  double match_s = 0.0;
  double estimate_s = 0.0;
};

struct CrossfitResult {
  std::vector<UnitEstimate> units;  // one per dataset row
  std::vector<FoldArtifacts> folds;
  StageTimings timings;
  int n_excluded = 0;  // units with no usable effect estimate

  /// Mean effect over units with both sides estimated.
  double ate() const;
  std::vector<double> cates() const;  // NaN where absent
};

/// Honest split-sample pipeline: for every fold f, standardization and all
/// models/metrics are fit on fold f alone, then groups and estimates are
/// produced for every unit outside f. Each unit therefore collects eta-1
/// estimates (times `repeats` independent fold plans) and its final values
/// are their arithmetic mean. Deterministic given the config, at any
/// thread count.
CrossfitResult crossfit_run(const Dataset& ds, const RunConfig& cfg);

}  // namespace m2m
