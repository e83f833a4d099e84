#pragma once

#include <array>
#include <span>
#include <vector>

#include "m2m/matrix.hpp"
#include "m2m/metric.hpp"

namespace m2m {

/// K nearest neighbors of one query unit in each treatment arm, drawn with
/// replacement from the estimation split. Neighbor lists are nearest-first;
/// exact distance ties are broken by ascending unit index; the query never
/// appears in its own lists.
struct MatchedGroup {
  int query = -1;
  int k_requested = 0;
  std::array<std::vector<int>, 2> neighbors;    // [arm] global row ids
  std::array<std::vector<double>, 2> distances; // parallel to neighbors

  int k_effective(int arm) const {
    return static_cast<int>(neighbors[static_cast<std::size_t>(arm)].size());
  }
  /// Query followed by both arms' neighbors (the audit unit set).
  std::vector<int> members() const;
};

/// sum_l w_l * |a_l - b_l|
double weighted_l1_distance(std::span<const double> w, std::span<const double> a,
                            std::span<const double> b);

/// The k candidates nearest to row `query` under the diagonal-weighted L1
/// distance; candidates listing `query` itself are skipped. Fewer than k
/// candidates simply yields all of them.
struct KnnResult {
  std::vector<int> ids;
  std::vector<double> distances;
};
KnnResult knn(const Matrix& x, std::span<const int> candidates, int query,
              std::span<const double> weights, int k);
KnnResult knn_euclidean(const Matrix& x, std::span<const int> candidates, int query,
                        int k);

/// One matched group per estimation row: per arm, the k nearest candidates
/// among the estimation rows of that arm. Zero-weight columns never enter
/// the distance, so sparse metrics match at the cost of their support size.
std::vector<MatchedGroup> match_groups(const Matrix& x, std::span<const int> t,
                                       std::span<const int> est_rows,
                                       const DistanceMetric& metric, int k,
                                       int threads = 1);

/// Per-arm variant: arm-a neighbors are ranked under metrics[a].
std::vector<MatchedGroup> match_groups(const Matrix& x, std::span<const int> t,
                                       std::span<const int> est_rows,
                                       const std::array<DistanceMetric, 2>& metrics,
                                       int k, int threads = 1);

/// Groups built in prognostic-score space: `scores` holds one row per unit
/// (columns = fitted per-arm outcome predictions) and neighbors are ranked
/// by Euclidean distance between score rows.
std::vector<MatchedGroup> prognostic_match(const Matrix& scores, std::span<const int> t,
                                           std::span<const int> est_rows, int k,
                                           int threads = 1);

/// Two-stage groups: per arm, the k1 nearest in score space, then the k2
/// nearest of those under the weighted-L1 metric on the covariates.
std::vector<MatchedGroup> lap_match(const Matrix& x, const Matrix& scores,
                                    std::span<const int> t,
                                    std::span<const int> est_rows,
                                    const DistanceMetric& metric, int k1, int k2,
                                    int threads = 1);

}  // namespace m2m
