#include <doctest.h>

#include <cmath>
#include <set>

#include "m2m/dgp.hpp"
#include "m2m/estimate.hpp"
#include "m2m/rng.hpp"
#include "oracles.hpp"

using namespace m2m;

namespace {

RunConfig basic_config(Method method, int eta = 3, int k = 4) {
  RunConfig cfg;
  cfg.method = method;
  cfg.eta = eta;
  cfg.k = k;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("every unit collects eta-1 contributions per fold plan") {
  const Dataset ds = oracles::random_dataset(60, 3, 1001);
  RunConfig cfg = basic_config(Method::uniform, 4);
  const CrossfitResult res = crossfit_run(ds, cfg);
  REQUIRE(res.units.size() == 60);
  for (const auto& u : res.units) CHECK(u.n_contributions == 3);
  REQUIRE(res.folds.size() == 4);

  cfg.repeats = 2;
  const CrossfitResult rep = crossfit_run(ds, cfg);
  for (const auto& u : rep.units) CHECK(u.n_contributions == 6);
  REQUIRE(rep.folds.size() == 8);
}

TEST_CASE("estimation rows are the complement of the training fold") {
  const Dataset ds = oracles::random_dataset(40, 3, 1002);
  const CrossfitResult res = crossfit_run(ds, basic_config(Method::uniform));
  for (const auto& art : res.folds) {
    std::set<int> train(art.train_rows.begin(), art.train_rows.end());
    std::set<int> est(art.est_rows.begin(), art.est_rows.end());
    CHECK(train.size() + est.size() == 40);
    for (int r : art.est_rows) CHECK(train.count(r) == 0);
    CHECK(art.groups.size() == art.est_rows.size());
  }
}

TEST_CASE("metrics depend only on the training fold (honesty)") {
  const Dataset ds = oracles::random_dataset(60, 4, 1003);
  RunConfig cfg = basic_config(Method::lcm);
  const CrossfitResult base = crossfit_run(ds, cfg);

  // Corrupt the outcomes of everything outside fold 0's training rows; the
  // fold-0 metric must not move.
  Dataset poked = ds;
  std::set<int> fold0(base.folds[0].train_rows.begin(), base.folds[0].train_rows.end());
  for (std::size_t i = 0; i < poked.y.size(); ++i)
    if (!fold0.count(static_cast<int>(i))) poked.y[i] += 100.0;
  const CrossfitResult moved = crossfit_run(poked, cfg);
  CHECK(moved.folds[0].train_rows == base.folds[0].train_rows);
  CHECK(moved.folds[0].metrics[0].weights == base.folds[0].metrics[0].weights);
}

TEST_CASE("adding a constant to treated outcomes shifts effects by that constant") {
  const Dataset ds = oracles::random_dataset(50, 3, 1004);
  const RunConfig cfg = basic_config(Method::uniform);
  const CrossfitResult base = crossfit_run(ds, cfg);

  Dataset shifted = ds;
  for (std::size_t i = 0; i < shifted.y.size(); ++i)
    if (shifted.t[i] == 1) shifted.y[i] += 7.5;
  const CrossfitResult moved = crossfit_run(shifted, cfg);
  for (std::size_t i = 0; i < 50; ++i) {
    REQUIRE(base.units[i].has_cate());
    CHECK(moved.units[i].cate == doctest::Approx(base.units[i].cate + 7.5));
  }
}

TEST_CASE("relabeling the arms negates every effect exactly") {
  const Dataset ds = oracles::random_dataset(50, 3, 1005);
  const RunConfig cfg = basic_config(Method::lcm);
  const CrossfitResult base = crossfit_run(ds, cfg);

  Dataset flipped = ds;
  for (auto& t : flipped.t) t = 1 - t;
  const CrossfitResult moved = crossfit_run(flipped, cfg);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(moved.units[i].cate == doctest::Approx(-base.units[i].cate).epsilon(1e-12));
    CHECK(moved.units[i].yhat0 == doctest::Approx(base.units[i].yhat1).epsilon(1e-12));
    CHECK(moved.units[i].yhat1 == doctest::Approx(base.units[i].yhat0).epsilon(1e-12));
  }
}

TEST_CASE("mean estimator reproduces hand-averaged neighbor outcomes") {
  const Dataset ds = oracles::random_dataset(30, 2, 1006);
  const RunConfig cfg = basic_config(Method::uniform, 2, 3);
  const CrossfitResult res = crossfit_run(ds, cfg);
  // eta = 2: each unit is estimated exactly once, so its values equal the
  // single group's arm means.
  for (const auto& art : res.folds)
    for (std::size_t gi = 0; gi < art.groups.size(); ++gi) {
      const MatchedGroup& g = art.groups[gi];
      const PotentialOutcomes po = estimate_po_mean(g, ds.y);
      const UnitEstimate& u = res.units[static_cast<std::size_t>(g.query)];
      REQUIRE(po.has0);
      REQUIRE(po.has1);
      CHECK(u.yhat0 == doctest::Approx(po.yhat0));
      CHECK(u.yhat1 == doctest::Approx(po.yhat1));
      CHECK(u.cate == doctest::Approx(po.yhat1 - po.yhat0));
    }
}

TEST_CASE("mean potential outcomes average the matched arms") {
  MatchedGroup g;
  g.query = 0;
  g.neighbors[0] = {1, 2};
  g.neighbors[1] = {3};
  g.distances[0] = {0.1, 0.2};
  g.distances[1] = {0.3};
  const std::vector<double> y{0.0, 2.0, 4.0, 10.0};
  const PotentialOutcomes po = estimate_po_mean(g, y);
  CHECK(po.yhat0 == doctest::Approx(3.0));
  CHECK(po.yhat1 == doctest::Approx(10.0));
  CHECK(po.has0);
  CHECK(po.has1);

  MatchedGroup empty_arm = g;
  empty_arm.neighbors[1].clear();
  empty_arm.distances[1].clear();
  const PotentialOutcomes po2 = estimate_po_mean(empty_arm, y);
  CHECK(po2.has0);
  CHECK_FALSE(po2.has1);
}

TEST_CASE("linear estimator interpolates an in-group linear response exactly") {
  // Outcomes are exactly linear in x1 within each arm, so the within-group
  // regression must reproduce the query's own response value.
  const std::size_t n = 80;
  Dataset ds;
  ds.x = Matrix(n, 2);
  ds.t.resize(n);
  ds.y.resize(n);
  ds.columns.resize(2);
  Rng rng(1007);
  for (std::size_t i = 0; i < n; ++i) {
    ds.x(i, 0) = rng.uniform(-2.0, 2.0);
    ds.x(i, 1) = rng.normal();
    ds.t[i] = i % 2;
    ds.y[i] = ds.t[i] == 0 ? 2.0 * ds.x(i, 0) : 2.0 * ds.x(i, 0) + 5.0;
  }
  RunConfig cfg = basic_config(Method::lcm, 2, 10);
  cfg.estimator = EstimatorKind::linear;
  const CrossfitResult res = crossfit_run(ds, cfg);
  int checked = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!res.units[i].has_cate()) continue;
    CHECK(res.units[i].cate == doctest::Approx(5.0).epsilon(1e-4));
    ++checked;
  }
  CHECK(checked == static_cast<int>(n));
}

TEST_CASE("linear estimator falls back to the mean when groups are too small") {
  MatchedGroup g;
  g.query = 0;
  g.neighbors[0] = {1};
  g.distances[0] = {0.1};
  g.neighbors[1] = {2, 3, 4, 5};
  g.distances[1] = {0.1, 0.2, 0.3, 0.4};
  Matrix feats(6, 1);
  for (int i = 0; i < 6; ++i) feats(i, 0) = static_cast<double>(i);
  const std::vector<double> y{0.0, 3.0, 2.0, 4.0, 6.0, 8.0};
  const std::array<std::vector<int>, 2> cols{std::vector<int>{0}, std::vector<int>{0}};
  const PotentialOutcomes po = estimate_po_linear(g, feats, cols, y);
  CHECK(po.fallback0);        // one neighbor cannot support a 2-parameter fit
  CHECK(po.yhat0 == doctest::Approx(3.0));
  CHECK_FALSE(po.fallback1);  // four neighbors, one regressor: fits fine
  // y = 2 x - 2 over the arm-1 neighbors evaluated at the query x = 0
  CHECK(po.yhat1 == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("ate averages only units with both sides present") {
  const Dataset ds = oracles::random_dataset(40, 2, 1008);
  const CrossfitResult res = crossfit_run(ds, basic_config(Method::uniform));
  double sum = 0.0;
  int count = 0;
  for (const auto& u : res.units)
    if (u.has_cate()) {
      sum += u.cate;
      ++count;
    }
  REQUIRE(count > 0);
  CHECK(res.ate() == doctest::Approx(sum / count));
  CHECK(res.n_excluded == static_cast<int>(res.units.size()) - count);
  const auto cates = res.cates();
  for (std::size_t i = 0; i < res.units.size(); ++i)
    CHECK(std::isnan(cates[i]) == !res.units[i].has_cate());
}

TEST_CASE("runs are deterministic and thread-count invariant") {
  const Dataset ds = oracles::random_dataset(80, 4, 1009);
  RunConfig cfg = basic_config(Method::lcm, 4, 5);
  const CrossfitResult a = crossfit_run(ds, cfg);
  const CrossfitResult b = crossfit_run(ds, cfg);
  cfg.threads = 4;
  const CrossfitResult c = crossfit_run(ds, cfg);
  for (std::size_t i = 0; i < 80; ++i) {
    CHECK(a.units[i].cate == b.units[i].cate);
    CHECK(a.units[i].cate == c.units[i].cate);
  }
}

TEST_CASE("prognostic methods carry score-space groups") {
  const DgpSample s = gen_quadratic(300, 6, 2, 1, 77);
  for (const Method method : {Method::pgm_linear, Method::pgm_np}) {
    RunConfig cfg = basic_config(method, 3, 5);
    const CrossfitResult res = crossfit_run(s.dataset, cfg);
    CHECK(std::isfinite(res.ate()));
    for (const auto& art : res.folds) {
      CHECK(art.metrics[0].weights.empty());  // no covariate metric to report
      for (const auto& g : art.groups)
        for (int arm = 0; arm < 2; ++arm)
          for (double d : g.distances[static_cast<std::size_t>(arm)]) CHECK(d >= 0.0);
    }
  }
}

TEST_CASE("two-stage matching respects k1 and k2") {
  const DgpSample s = gen_quadratic(400, 8, 3, 1, 78);
  RunConfig cfg = basic_config(Method::lap, 2);
  cfg.k1 = 20;
  cfg.k2 = 6;
  const CrossfitResult res = crossfit_run(s.dataset, cfg);
  for (const auto& art : res.folds)
    for (const auto& g : art.groups)
      for (int arm = 0; arm < 2; ++arm) CHECK(g.k_effective(arm) <= 6);
  CHECK(std::isfinite(res.ate()));
}

TEST_CASE("oracle method requires a support and honors it") {
  const Dataset ds = oracles::random_dataset(50, 4, 1010);
  RunConfig cfg = basic_config(Method::oracle);
  CHECK_THROWS(crossfit_run(ds, cfg));
  cfg.oracle_support = {1, 3};
  const CrossfitResult res = crossfit_run(ds, cfg);
  for (const auto& art : res.folds) {
    CHECK(art.metrics[0].weights[1] == 1.0);
    CHECK(art.metrics[0].weights[3] == 1.0);
    CHECK(art.metrics[0].weights[0] == 0.0);
  }
  CHECK(std::isfinite(res.ate()));
}

TEST_CASE("per-arm method records both metrics") {
  const Dataset ds = oracles::random_dataset(80, 3, 1011);
  const CrossfitResult res = crossfit_run(ds, basic_config(Method::metalearner));
  for (const auto& art : res.folds) {
    CHECK(art.per_arm_metrics);
    CHECK(art.metrics[0].weights.size() == 3);
    CHECK(art.metrics[1].weights.size() == 3);
  }
}

TEST_CASE("invalid configurations are rejected") {
  const Dataset ds = oracles::random_dataset(20, 2, 1012);
  RunConfig bad_eta = basic_config(Method::uniform);
  bad_eta.eta = 1;
  CHECK_THROWS(crossfit_run(ds, bad_eta));
  RunConfig big_eta = basic_config(Method::uniform);
  big_eta.eta = 21;
  CHECK_THROWS(crossfit_run(ds, big_eta));
  RunConfig bad_k = basic_config(Method::uniform);
  bad_k.k = 0;
  CHECK_THROWS(crossfit_run(ds, bad_k));
}

TEST_CASE("fold plans with an empty training arm are redrawn") {
  // 36 rows, 8 treated, 6 folds: a uniform random plan leaves some fold with
  // no treated row more often than not, so the redraw path gets exercised;
  // the accepted plan must give every training fold both arms.
  Dataset ds = oracles::random_dataset(36, 2, 1013);
  for (std::size_t i = 0; i < ds.t.size(); ++i) ds.t[i] = 0;
  for (std::size_t i = 0; i < 36; i += 5) ds.t[i] = 1;
  const CrossfitResult res = crossfit_run(ds, basic_config(Method::uniform, 6));
  REQUIRE(res.folds.size() == 6);
  for (const auto& art : res.folds) {
    int treated = 0;
    for (int r : art.train_rows) treated += ds.t[static_cast<std::size_t>(r)];
    CHECK(treated > 0);
    CHECK(treated < static_cast<int>(art.train_rows.size()));
  }

  // With only 4 treated rows a 6-fold plan can never cover every training
  // fold, so the redraw budget runs out and the run must refuse.
  Dataset impossible = ds;
  for (std::size_t i = 0; i < impossible.t.size(); ++i) impossible.t[i] = 0;
  impossible.t[3] = impossible.t[11] = impossible.t[19] = impossible.t[27] = 1;
  CHECK_THROWS(crossfit_run(impossible, basic_config(Method::uniform, 6)));
}
