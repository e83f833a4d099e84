#include "m2m/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "m2m/parallel.hpp"

namespace m2m {

std::vector<int> MatchedGroup::members() const {
  std::vector<int> ids;
  ids.reserve(1 + neighbors[0].size() + neighbors[1].size());
  ids.push_back(query);
  for (const auto& arm : neighbors) ids.insert(ids.end(), arm.begin(), arm.end());
  return ids;
}

double weighted_l1_distance(std::span<const double> w, std::span<const double> a,
                            std::span<const double> b) {
  if (w.size() != a.size() || a.size() != b.size())
    throw std::runtime_error("weighted_l1_distance: length mismatch");
  double d = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) d += w[l] * std::abs(a[l] - b[l]);
  return d;
}

namespace {

struct Scored {
  double dist;  // ordering key (squared distance for the Euclidean pool)
  int id;
};

bool scored_less(const Scored& a, const Scored& b) {
  return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
}

/// Candidate rows of one arm, compacted to the metric's active columns so
/// query scans stream through contiguous memory. Column order is kept
/// ascending; zero-weight columns contribute exactly zero to the distance,
/// so dropping them changes nothing about the values produced.
class Pool {
 public:
  enum class Norm { weighted_l1, euclidean };

  Pool(const Matrix& x, std::span<const int> rows, std::span<const double> weights,
       Norm norm)
      : norm_(norm) {
    ids_.assign(rows.begin(), rows.end());
    std::sort(ids_.begin(), ids_.end());  // ascending ids make ties positional
    if (norm == Norm::weighted_l1) {
      for (std::size_t j = 0; j < weights.size(); ++j)
        if (weights[j] > 0.0) {
          active_.push_back(static_cast<int>(j));
          w_.push_back(weights[j]);
        }
    } else {
      active_.resize(x.cols());
      std::iota(active_.begin(), active_.end(), 0);
    }
    data_.resize(ids_.size() * active_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i)
      for (std::size_t c = 0; c < active_.size(); ++c)
        data_[i * active_.size() + c] =
            x(static_cast<std::size_t>(ids_[i]), static_cast<std::size_t>(active_[c]));
  }

  std::size_t size() const { return ids_.size(); }

  void load_query(const Matrix& x, int query, std::vector<double>& q) const {
    q.resize(active_.size());
    for (std::size_t c = 0; c < active_.size(); ++c)
      q[c] = x(static_cast<std::size_t>(query), static_cast<std::size_t>(active_[c]));
  }

  /// k nearest to the compacted query values, self excluded, ties by id.
  void query(std::span<const double> q, int self, int k, std::vector<Scored>& scratch,
             std::vector<int>& out_ids, std::vector<double>& out_dists) const {
    const std::size_t m = active_.size();
    scratch.clear();
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i] == self) continue;
      const double* row = data_.data() + i * m;
      double d = 0.0;
      if (norm_ == Norm::weighted_l1) {
        for (std::size_t c = 0; c < m; ++c) d += w_[c] * std::abs(row[c] - q[c]);
      } else {
        for (std::size_t c = 0; c < m; ++c) {
          const double dc = row[c] - q[c];
          d += dc * dc;
        }
      }
      scratch.push_back({d, ids_[i]});
    }
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                   scratch.size());
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<long>(take),
                      scratch.end(), scored_less);
    out_ids.resize(take);
    out_dists.resize(take);
    for (std::size_t i = 0; i < take; ++i) {
      out_ids[i] = scratch[i].id;
      out_dists[i] =
          norm_ == Norm::weighted_l1 ? scratch[i].dist : std::sqrt(scratch[i].dist);
    }
  }

 private:
  Norm norm_;
  std::vector<int> ids_;
  std::vector<int> active_;
  std::vector<double> w_;
  std::vector<double> data_;
};

std::vector<int> arm_members(std::span<const int> t, std::span<const int> rows, int arm) {
  std::vector<int> out;
  for (int i : rows)
    if (t[static_cast<std::size_t>(i)] == arm) out.push_back(i);
  return out;
}

std::vector<MatchedGroup> run_pools(const Matrix& x, std::span<const int> est_rows,
                                    const std::array<Pool, 2>& pools, int k,
                                    int threads) {
  if (k < 1) throw std::runtime_error("match: k must be at least 1");
  std::vector<MatchedGroup> groups(est_rows.size());
  parallel_for(est_rows.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<Scored> scratch;
    std::vector<double> q;
    for (std::size_t i = begin; i < end; ++i) {
      MatchedGroup& g = groups[i];
      g.query = est_rows[i];
      g.k_requested = k;
      for (int a = 0; a < 2; ++a) {
        const Pool& pool = pools[static_cast<std::size_t>(a)];
        pool.load_query(x, g.query, q);
        pool.query(q, g.query, k, scratch, g.neighbors[static_cast<std::size_t>(a)],
                   g.distances[static_cast<std::size_t>(a)]);
      }
    }
  });
  return groups;
}

}  // namespace

KnnResult knn(const Matrix& x, std::span<const int> candidates, int query,
              std::span<const double> weights, int k) {
  Pool pool(x, candidates, weights, Pool::Norm::weighted_l1);
  std::vector<Scored> scratch;
  std::vector<double> q;
  pool.load_query(x, query, q);
  KnnResult res;
  pool.query(q, query, k, scratch, res.ids, res.distances);
  return res;
}

KnnResult knn_euclidean(const Matrix& x, std::span<const int> candidates, int query,
                        int k) {
  Pool pool(x, candidates, {}, Pool::Norm::euclidean);
  std::vector<Scored> scratch;
  std::vector<double> q;
  pool.load_query(x, query, q);
  KnnResult res;
  pool.query(q, query, k, scratch, res.ids, res.distances);
  return res;
}

std::vector<MatchedGroup> match_groups(const Matrix& x, std::span<const int> t,
                                       std::span<const int> est_rows,
                                       const DistanceMetric& metric, int k,
                                       int threads) {
  return match_groups(x, t, est_rows, std::array<DistanceMetric, 2>{metric, metric}, k,
                      threads);
}

std::vector<MatchedGroup> match_groups(const Matrix& x, std::span<const int> t,
                                       std::span<const int> est_rows,
                                       const std::array<DistanceMetric, 2>& metrics,
                                       int k, int threads) {
  for (const auto& m : metrics) {
    if (m.weights.size() != x.cols())
      throw std::runtime_error("match_groups: metric length does not match data");
    if (m.active_columns().empty())
      throw std::runtime_error("match_groups: metric has no positive weights");
  }
  std::array<Pool, 2> pools{
      Pool(x, arm_members(t, est_rows, 0), metrics[0].weights, Pool::Norm::weighted_l1),
      Pool(x, arm_members(t, est_rows, 1), metrics[1].weights, Pool::Norm::weighted_l1)};
  return run_pools(x, est_rows, pools, k, threads);
}

std::vector<MatchedGroup> prognostic_match(const Matrix& scores, std::span<const int> t,
                                           std::span<const int> est_rows, int k,
                                           int threads) {
  std::array<Pool, 2> pools{
      Pool(scores, arm_members(t, est_rows, 0), {}, Pool::Norm::euclidean),
      Pool(scores, arm_members(t, est_rows, 1), {}, Pool::Norm::euclidean)};
  return run_pools(scores, est_rows, pools, k, threads);
}

std::vector<MatchedGroup> lap_match(const Matrix& x, const Matrix& scores,
                                    std::span<const int> t,
                                    std::span<const int> est_rows,
                                    const DistanceMetric& metric, int k1, int k2,
                                    int threads) {
  if (k2 > k1) throw std::runtime_error("lap_match: k2 must not exceed k1");
  if (metric.weights.size() != x.cols())
    throw std::runtime_error("lap_match: metric length does not match data");
  if (metric.active_columns().empty())
    throw std::runtime_error("lap_match: metric has no positive weights");
  if (scores.rows() != x.rows())
    throw std::runtime_error("lap_match: score rows do not match data");
  std::vector<MatchedGroup> stage1 = prognostic_match(scores, t, est_rows, k1, threads);

  const std::vector<int> active = metric.active_columns();
  std::vector<MatchedGroup> groups(est_rows.size());
  parallel_for(est_rows.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<Scored> scratch;
    for (std::size_t i = begin; i < end; ++i) {
      MatchedGroup& g = groups[i];
      g.query = est_rows[i];
      g.k_requested = k2;
      const auto qi = static_cast<std::size_t>(g.query);
      for (int a = 0; a < 2; ++a) {
        const auto& shortlist = stage1[i].neighbors[static_cast<std::size_t>(a)];
        scratch.clear();
        for (int cand : shortlist) {
          double d = 0.0;
          for (int j : active) {
            const auto col = static_cast<std::size_t>(j);
            d += metric.weights[col] *
                 std::abs(x(static_cast<std::size_t>(cand), col) - x(qi, col));
          }
          scratch.push_back({d, cand});
        }
        const std::size_t take =
            std::min<std::size_t>(static_cast<std::size_t>(k2), scratch.size());
        std::partial_sort(scratch.begin(), scratch.begin() + static_cast<long>(take),
                          scratch.end(), scored_less);
        auto& ids = g.neighbors[static_cast<std::size_t>(a)];
        auto& dists = g.distances[static_cast<std::size_t>(a)];
        ids.resize(take);
        dists.resize(take);
        for (std::size_t r = 0; r < take; ++r) {
          ids[r] = scratch[r].id;
          dists[r] = scratch[r].dist;
        }
      }
    }
  });
  return groups;
}

}  // namespace m2m
