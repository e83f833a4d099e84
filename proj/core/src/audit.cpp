#include "m2m/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace m2m {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::runtime_error("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw std::runtime_error("quantile: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<TightnessRow> tightness(const std::vector<MatchedGroup>& groups,
                                    const Matrix& x,
                                    const std::vector<ColumnInfo>& columns,
                                    std::size_t* n_empty) {
  if (columns.size() != x.cols())
    throw std::runtime_error("tightness: column metadata does not match x");
  const std::size_t p = x.cols();
  std::vector<double> acc(p, 0.0);
  std::size_t used = 0, empty = 0;
  std::vector<double> group_mean(p);
  for (const auto& g : groups) {
    std::size_t n_neighbors = 0;
    std::fill(group_mean.begin(), group_mean.end(), 0.0);
    const auto q = static_cast<std::size_t>(g.query);
    for (const auto& arm : g.neighbors) {
      for (int nb : arm) {
        for (std::size_t j = 0; j < p; ++j)
          group_mean[j] += std::abs(x(q, j) - x(static_cast<std::size_t>(nb), j));
        ++n_neighbors;
      }
    }
    if (n_neighbors == 0) {
      ++empty;
      continue;
    }
    for (std::size_t j = 0; j < p; ++j)
      acc[j] += group_mean[j] / static_cast<double>(n_neighbors);
    ++used;
  }
  if (n_empty) *n_empty = empty;
  if (used == 0) throw std::runtime_error("tightness: every group is empty");
  std::vector<TightnessRow> rows(p);
  for (std::size_t j = 0; j < p; ++j) {
    rows[j].column = columns[j].name;
    rows[j].kind = columns[j].kind;
    rows[j].value = acc[j] / static_cast<double>(used);
  }
  return rows;
}

std::vector<double> dispersion(const std::vector<MatchedGroup>& groups, const Matrix& x,
                               std::size_t* n_skipped) {
  const std::size_t p = x.cols();
  std::vector<double> acc(p, 0.0);
  std::size_t used = 0, skipped = 0;
  for (const auto& g : groups) {
    const std::vector<int> members = g.members();
    if (members.size() < 2) {
      ++skipped;
      continue;
    }
    const double m = static_cast<double>(members.size());
    for (std::size_t j = 0; j < p; ++j) {
      double mean = 0.0;
      for (int i : members) mean += x(static_cast<std::size_t>(i), j);
      mean /= m;
      double ss = 0.0;
      for (int i : members) {
        const double d = x(static_cast<std::size_t>(i), j) - mean;
        ss += d * d;
      }
      acc[j] += std::sqrt(ss / (m - 1.0));
    }
    ++used;
  }
  if (n_skipped) *n_skipped = skipped;
  if (used == 0) throw std::runtime_error("dispersion: every group is a singleton");
  for (double& v : acc) v /= static_cast<double>(used);
  return acc;
}

CateErrorReport cate_errors(std::span<const double> cates,
                            std::span<const double> true_cate, double true_ate) {
  if (cates.size() != true_cate.size())
    throw std::runtime_error("cate_errors: estimate/truth length mismatch");
  CateErrorReport rep;
  rep.normalized = true_ate != 0.0;
  rep.denom = rep.normalized ? std::abs(true_ate) : 1.0;
  if (!rep.normalized)
    warn("cate_errors: true average effect is zero; reporting unnormalized errors");
  rep.per_unit.assign(cates.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> present;
  present.reserve(cates.size());
  for (std::size_t i = 0; i < cates.size(); ++i) {
    if (std::isnan(cates[i])) {
      ++rep.n_missing;
      continue;
    }
    rep.per_unit[i] = std::abs(cates[i] - true_cate[i]) / rep.denom;
    present.push_back(rep.per_unit[i]);
  }
  if (present.empty()) throw std::runtime_error("cate_errors: no estimates present");
  rep.median = quantile(present, 0.5);
  rep.q25 = quantile(present, 0.25);
  rep.q75 = quantile(std::move(present), 0.75);
  return rep;
}

}  // namespace m2m
