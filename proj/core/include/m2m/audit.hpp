#pragma once

#include <span>
#include <string>
#include <vector>

#include "m2m/dataset.hpp"
#include "m2m/matching.hpp"

namespace m2m {

/// Linear-interpolation sample quantile (the ubiquitous "type 7" rule);
/// q in [0, 1]. The input need not be sorted.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

/// How close matched neighbors sit to their query, per covariate, on the
/// ORIGINAL covariate scale (matching itself runs standardized). For 0/1
/// columns the same number reads as the label-mismatch rate.
struct TightnessRow {
  std::string column;
  ColumnKind kind = ColumnKind::continuous;
  double value = 0.0;  // mean |x_query - x_neighbor|, within-group mean first
};

/// Mean absolute query-to-neighbor difference per covariate: averaged over
/// a group's neighbors first, then across groups. Groups with no neighbors
/// are excluded; their count lands in *n_empty.
std::vector<TightnessRow> tightness(const std::vector<MatchedGroup>& groups,
                                    const Matrix& x,
                                    const std::vector<ColumnInfo>& columns,
                                    std::size_t* n_empty = nullptr);

/// Mean across groups of the within-group sample standard deviation of
/// each covariate, the group being the query plus all its neighbors,
/// original scale. Groups with fewer than two members are skipped; their
/// count lands in *n_skipped.
std::vector<double> dispersion(const std::vector<MatchedGroup>& groups, const Matrix& x,
                               std::size_t* n_skipped = nullptr);

/// Per-unit |estimate - truth| scaled by |true average effect|. When that
/// average is zero the report falls back to unnormalized absolute errors
/// and says so.
struct CateErrorReport {
  std::vector<double> per_unit;  // NaN where the estimate is absent
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  bool normalized = true;
  double denom = 1.0;
  std::size_t n_missing = 0;
};

CateErrorReport cate_errors(std::span<const double> cates,
                            std::span<const double> true_cate, double true_ate);

}  // namespace m2m
