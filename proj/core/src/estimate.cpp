#include "m2m/estimate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "m2m/parallel.hpp"
#include "m2m/rng.hpp"

namespace m2m {

std::string to_string(Method m) {
  switch (m) {
    case Method::lcm: return "lcm";
    case Method::metalearner: return "metalearner";
    case Method::tree: return "tree";
    case Method::pgm_linear: return "pgm_linear";
    case Method::pgm_np: return "pgm_np";
    case Method::lap: return "lap";
    case Method::feature_select: return "feature_select";
    case Method::oracle: return "oracle";
    case Method::uniform: return "uniform";
  }
  return "unknown";
}

std::string to_string(EstimatorKind e) {
  return e == EstimatorKind::mean ? "mean" : "linear";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::lcm, Method::metalearner, Method::tree, Method::pgm_linear,
                   Method::pgm_np, Method::lap, Method::feature_select, Method::oracle,
                   Method::uniform})
    if (to_string(m) == s) return m;
  throw std::runtime_error("unknown method '" + s + "'");
}

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "mean") return EstimatorKind::mean;
  if (s == "linear") return EstimatorKind::linear;
  throw std::runtime_error("unknown estimator '" + s + "'; expected mean or linear");
}

PotentialOutcomes estimate_po_mean(const MatchedGroup& g, std::span<const double> y) {
  PotentialOutcomes po;
  for (int a = 0; a < 2; ++a) {
    const auto& nb = g.neighbors[static_cast<std::size_t>(a)];
    if (nb.empty()) continue;
    double sum = 0.0;
    for (int i : nb) sum += y[static_cast<std::size_t>(i)];
    const double mean = sum / static_cast<double>(nb.size());
    if (a == 0) {
      po.yhat0 = mean;
      po.has0 = true;
    } else {
      po.yhat1 = mean;
      po.has1 = true;
    }
  }
  return po;
}

namespace {

/// In-place Cholesky solve of a small symmetric positive-definite system.
/// Returns false when the factorization breaks down.
bool solve_spd(std::vector<double>& a, std::vector<double>& b, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * d + k] * a[j * d + k];
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        a[i * d + i] = std::sqrt(s);
      } else {
        a[i * d + j] = s / a[j * d + j];
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * d + k] * b[k];
    b[i] = s / a[i * d + i];
  }
  for (std::size_t i = d; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < d; ++k) s -= a[k * d + i] * b[k];
    b[i] = s / a[i * d + i];
  }
  return true;
}

constexpr double kRidge = 1e-8;

/// Least squares of the neighbors' outcomes on [1, feats[cols]] evaluated
/// at the query; nullopt-style failure is signaled through `ok`.
double in_group_linear(const Matrix& feats, std::span<const int> cols,
                       std::span<const int> neighbors, std::span<const double> y,
                       int query, bool& ok) {
  const std::size_t d = cols.size() + 1;
  std::vector<double> z(d);
  std::vector<double> a(d * d, 0.0);
  std::vector<double> b(d, 0.0);
  for (int nb : neighbors) {
    z[0] = 1.0;
    for (std::size_t c = 0; c < cols.size(); ++c)
      z[c + 1] = feats(static_cast<std::size_t>(nb),
                       static_cast<std::size_t>(cols[c]));
    const double yi = y[static_cast<std::size_t>(nb)];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j <= i; ++j) a[i * d + j] += z[i] * z[j];
      b[i] += z[i] * yi;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    a[i * d + i] += kRidge;
    for (std::size_t j = i + 1; j < d; ++j) a[i * d + j] = a[j * d + i];
  }
  if (!solve_spd(a, b, d)) {
    ok = false;
    return 0.0;
  }
  double pred = b[0];
  for (std::size_t c = 0; c < cols.size(); ++c)
    pred += b[c + 1] * feats(static_cast<std::size_t>(query),
                             static_cast<std::size_t>(cols[c]));
  if (!std::isfinite(pred)) {
    ok = false;
    return 0.0;
  }
  ok = true;
  return pred;
}

}  // namespace

PotentialOutcomes estimate_po_linear(const MatchedGroup& g, const Matrix& feats,
                                     const std::array<std::vector<int>, 2>& cols,
                                     std::span<const double> y) {
  PotentialOutcomes po = estimate_po_mean(g, y);
  for (int a = 0; a < 2; ++a) {
    const auto& nb = g.neighbors[static_cast<std::size_t>(a)];
    const auto& armcols = cols[static_cast<std::size_t>(a)];
    bool& fallback = a == 0 ? po.fallback0 : po.fallback1;
    if (nb.empty()) continue;
    if (nb.size() < armcols.size() + 2) {
      fallback = true;  // too few neighbors to support the regression
      continue;
    }
    bool ok = false;
    const double pred = in_group_linear(feats, armcols, nb, y, g.query, ok);
    if (!ok) {
      fallback = true;
      continue;
    }
    (a == 0 ? po.yhat0 : po.yhat1) = pred;
  }
  return po;
}

double CrossfitResult::ate() const {
  double sum = 0.0;
  std::size_t m = 0;
  for (const auto& u : units) {
    if (!u.has_cate()) continue;
    sum += u.cate;
    ++m;
  }
  if (m == 0) throw std::runtime_error("ate: no unit has both sides estimated");
  return sum / static_cast<double>(m);
}

std::vector<double> CrossfitResult::cates() const {
  std::vector<double> out(units.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < units.size(); ++i)
    if (units[i].has_cate()) out[i] = units[i].cate;
  return out;
}

namespace {

bool fold_has_both_arms(const Dataset& ds, const std::vector<int>& rows) {
  bool seen[2] = {false, false};
  for (int i : rows) seen[ds.t[static_cast<std::size_t>(i)]] = true;
  return seen[0] && seen[1];
}

FoldPlan plan_folds(const Dataset& ds, int eta, std::uint64_t seed) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    FoldPlan plan = make_folds(ds.n(), eta, mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    bool ok = true;
    for (int f = 0; f < eta && ok; ++f) ok = fold_has_both_arms(ds, plan.rows_in(f));
    if (ok) return plan;
  }
  throw std::runtime_error(
      "crossfit: could not draw folds with both arms present in every training fold");
}

/// Per-arm prognostic predictions for every row, from models fit on the
/// training rows only.
Matrix fit_scores(const Matrix& xs, std::span<const int> train_rows,
                  const Dataset& ds, Method score_model, const RunConfig& cfg,
                  std::uint64_t seed) {
  Matrix scores(xs.rows(), 2);
  for (int a = 0; a < 2; ++a) {
    std::vector<int> rows;
    for (int i : train_rows)
      if (ds.t[static_cast<std::size_t>(i)] == a) rows.push_back(i);
    Matrix xa = gather_rows(xs, rows);
    std::vector<double> ya = gather_values(std::span<const double>(ds.y),
                                           std::span<const int>(rows));
    std::vector<double> pred;
    if (score_model == Method::pgm_linear) {
      CvLassoResult cv = cv_lasso(xa, ya, cfg.lasso, seed);
      pred = cv.fit.predict(xs);
    } else {
      BoostedModel gbm = fit_gbm(xa, ya, cfg.gbm);
      pred = gbm.predict(xs);
    }
    for (std::size_t i = 0; i < xs.rows(); ++i)
      scores(i, static_cast<std::size_t>(a)) = pred[i];
  }
  return scores;
}

}  // namespace

CrossfitResult crossfit_run(const Dataset& ds, const RunConfig& cfg) {
  ds.validate();
  if (cfg.eta < 2) throw std::runtime_error("crossfit: eta must be at least 2");
  if (cfg.k < 1) throw std::runtime_error("crossfit: k must be at least 1");
  if (cfg.repeats < 1) throw std::runtime_error("crossfit: repeats must be at least 1");
  if (cfg.method == Method::oracle && cfg.oracle_support.empty())
    throw std::runtime_error("crossfit: oracle method needs a known support");
  if (cfg.method == Method::lap) {
    if (cfg.lap_score != Method::pgm_linear && cfg.lap_score != Method::pgm_np)
      throw std::runtime_error("crossfit: lap score model must be pgm_linear or pgm_np");
    if (cfg.k2 > cfg.k1) throw std::runtime_error("crossfit: k2 must not exceed k1");
  }
  const int threads = cfg.threads == 0 ? hardware_threads() : cfg.threads;
  const std::size_t n = ds.n();
  const std::size_t p = ds.p();
  const bool uses_scores = cfg.method == Method::pgm_linear ||
                           cfg.method == Method::pgm_np || cfg.method == Method::lap;

  CrossfitResult res;
  res.units.assign(n, {});
  std::vector<double> sum0(n, 0.0), sum1(n, 0.0);

  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  for (int rep = 0; rep < cfg.repeats; ++rep) {
    const std::uint64_t rep_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    const FoldPlan plan = plan_folds(ds, cfg.eta, rep_seed);
    for (int f = 0; f < cfg.eta; ++f) {
      FoldArtifacts art;
      art.repeat = rep;
      art.fold = f;
      art.train_rows = plan.rows_in(f);
      art.est_rows = plan.rows_not_in(f);
      try {
        const auto t_learn = clock::now();
        const Standardization stdz = fit_standardization(ds.x, art.train_rows);
        const Matrix xs = stdz.transform(ds.x);
        const Matrix xtr = gather_rows(xs, art.train_rows);
        const std::vector<double> ytr = gather_values(
            std::span<const double>(ds.y), std::span<const int>(art.train_rows));
        const std::vector<int> ttr = gather_values(
            std::span<const int>(ds.t), std::span<const int>(art.train_rows));
        const std::uint64_t learn_seed =
            mix_seed(mix_seed(rep_seed, 0x6c6561726eULL), static_cast<std::uint64_t>(f));

        Matrix scores;
        switch (cfg.method) {
          case Method::lcm: {
            DistanceMetric m = learn_lcm_metric(xtr, ytr, ttr, cfg.lasso, learn_seed);
            art.metrics = {m, m};
            break;
          }
          case Method::metalearner:
            art.metrics = learn_metalearner_metrics(xtr, ytr, ttr, cfg.lasso, learn_seed);
            art.per_arm_metrics = true;
            break;
          case Method::tree: {
            DistanceMetric m = learn_tree_metric(xtr, ytr, ttr, cfg.tree);
            art.metrics = {m, m};
            break;
          }
          case Method::feature_select: {
            DistanceMetric m = feature_select_metric(
                learn_lcm_metric(xtr, ytr, ttr, cfg.lasso, learn_seed));
            art.metrics = {m, m};
            break;
          }
          case Method::oracle: {
            DistanceMetric m = oracle_metric(cfg.oracle_support, p);
            art.metrics = {m, m};
            break;
          }
          case Method::uniform: {
            DistanceMetric m = uniform_metric(p);
            art.metrics = {m, m};
            break;
          }
          case Method::pgm_linear:
          case Method::pgm_np:
            scores = fit_scores(xs, art.train_rows, ds, cfg.method, cfg, learn_seed);
            break;
          case Method::lap: {
            scores = fit_scores(xs, art.train_rows, ds, cfg.lap_score, cfg, learn_seed);
            DistanceMetric m = learn_lcm_metric(xtr, ytr, ttr, cfg.lasso, learn_seed);
            art.metrics = {m, m};
            break;
          }
        }
        for (auto& m : art.metrics) m.fold = f;
        res.timings.learn_s += seconds_since(t_learn);

        const auto t_match = clock::now();
        switch (cfg.method) {
          case Method::pgm_linear:
          case Method::pgm_np:
            art.groups = prognostic_match(scores, ds.t, art.est_rows, cfg.k, threads);
            break;
          case Method::lap:
            art.groups = lap_match(xs, scores, ds.t, art.est_rows, art.metrics[0],
                                   cfg.k1, cfg.k2, threads);
            break;
          default:
            art.groups = match_groups(xs, ds.t, art.est_rows, art.metrics, cfg.k,
                                      threads);
        }
        res.timings.match_s += seconds_since(t_match);

        const auto t_est = clock::now();
        const Matrix& feats = uses_scores && cfg.method != Method::lap ? scores : xs;
        std::array<std::vector<int>, 2> cols;
        if (cfg.method == Method::pgm_linear || cfg.method == Method::pgm_np)
          cols = {std::vector<int>{0, 1}, std::vector<int>{0, 1}};
        else
          cols = {art.metrics[0].active_columns(), art.metrics[1].active_columns()};
        std::atomic<int> fallbacks{0};
        parallel_for(art.groups.size(), threads, [&](std::size_t begin, std::size_t end) {
          int local_fallbacks = 0;
          for (std::size_t gi = begin; gi < end; ++gi) {
            const MatchedGroup& g = art.groups[gi];
            const PotentialOutcomes po =
                cfg.estimator == EstimatorKind::mean
                    ? estimate_po_mean(g, ds.y)
                    : estimate_po_linear(g, feats, cols, ds.y);
            local_fallbacks += static_cast<int>(po.fallback0) +
                               static_cast<int>(po.fallback1);
            auto& unit = res.units[static_cast<std::size_t>(g.query)];
            if (po.has0) {
              sum0[static_cast<std::size_t>(g.query)] += po.yhat0;
              ++unit.n0;
            }
            if (po.has1) {
              sum1[static_cast<std::size_t>(g.query)] += po.yhat1;
              ++unit.n1;
            }
            ++unit.n_contributions;
          }
          fallbacks += local_fallbacks;
        });
        art.linear_fallbacks = fallbacks.load();
        res.timings.estimate_s += seconds_since(t_est);
      } catch (const std::exception& e) {
        throw std::runtime_error("crossfit fold " + std::to_string(f) + " (repeat " +
                                 std::to_string(rep) + "): " + e.what());
      }
      res.folds.push_back(std::move(art));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    UnitEstimate& u = res.units[i];
    if (u.n0 > 0) u.yhat0 = sum0[i] / u.n0;
    if (u.n1 > 0) u.yhat1 = sum1[i] / u.n1;
    if (u.has_cate())
      u.cate = u.yhat1 - u.yhat0;
    else
      ++res.n_excluded;
  }
  if (res.n_excluded > 0)
    warn("crossfit: " + std::to_string(res.n_excluded) +
         " units have no usable effect estimate");
  return res;
}

}  // namespace m2m
