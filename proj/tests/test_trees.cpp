#include <doctest.h>

#include <cmath>

#include "m2m/rng.hpp"
#include "m2m/trees.hpp"

using namespace m2m;

namespace {

Matrix column(const std::vector<double>& v) {
  Matrix x(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) x(i, 0) = v[i];
  return x;
}

double mse(const TreeModel& tree, const Matrix& x, const std::vector<double>& y) {
  const auto pred = tree.predict(x);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (pred[i] - y[i]) * (pred[i] - y[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("a clean step function splits at the midpoint") {
  const Matrix x = column({0.0, 1.0, 2.0, 3.0});
  const std::vector<double> y{0.0, 0.0, 10.0, 10.0};
  TreeConfig cfg;
  cfg.max_depth = 1;
  cfg.min_leaf = 1;
  const TreeModel tree = fit_tree(x, y, cfg);
  REQUIRE(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == doctest::Approx(1.5));
  CHECK(tree.n_leaves() == 2);
  const std::vector<double> q{1.4};
  CHECK(tree.predict_row(q) == doctest::Approx(0.0));
  const std::vector<double> q2{1.6};
  CHECK(tree.predict_row(q2) == doctest::Approx(10.0));
}

TEST_CASE("min_leaf suppresses splits that would starve a side") {
  const Matrix x = column({0.0, 1.0, 2.0, 3.0});
  const std::vector<double> y{0.0, 0.0, 10.0, 10.0};
  TreeConfig cfg;
  cfg.max_depth = 3;
  cfg.min_leaf = 3;
  const TreeModel tree = fit_tree(x, y, cfg);
  CHECK(tree.n_leaves() == 1);  // no admissible split
  CHECK(tree.nodes[0].value == doctest::Approx(5.0));
}

TEST_CASE("equal gains pick the lowest feature index") {
  Matrix x(4, 2);
  for (int i = 0; i < 4; ++i) {
    x(i, 0) = i;
    x(i, 1) = i;  // identical column
  }
  const std::vector<double> y{0.0, 0.0, 10.0, 10.0};
  TreeConfig cfg;
  cfg.max_depth = 1;
  cfg.min_leaf = 1;
  const TreeModel tree = fit_tree(x, y, cfg);
  CHECK(tree.nodes[0].feature == 0);
}

TEST_CASE("a pure response never splits and has zero importance") {
  const Matrix x = column({1.0, 2.0, 3.0, 4.0});
  const std::vector<double> y(4, 3.0);
  TreeConfig cfg;
  cfg.max_depth = 3;
  cfg.min_leaf = 1;
  const TreeModel tree = fit_tree(x, y, cfg);
  CHECK(tree.n_leaves() == 1);
  const auto imp = tree_importance(tree);
  CHECK(imp == std::vector<double>{0.0});
}

TEST_CASE("split gains normalize to one and favor the informative feature") {
  Rng rng(3);
  const std::size_t n = 200;
  Matrix x(n, 3);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal();
    y[i] = (x(i, 1) > 0.0 ? 5.0 : -5.0) + 0.1 * rng.normal();
  }
  const TreeModel tree = fit_tree(x, y, {});
  const auto imp = tree_importance(tree);
  double sum = 0.0;
  for (double v : imp) sum += v;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(imp[1] > 0.9);
}

TEST_CASE("deeper trees never fit worse on the training data") {
  Rng rng(4);
  const std::size_t n = 300;
  Matrix x(n, 2);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-2.0, 2.0);
    x(i, 1) = rng.normal();
    y[i] = x(i, 0) * x(i, 0) + 0.1 * rng.normal();
  }
  TreeConfig shallow;
  shallow.max_depth = 1;
  TreeConfig deep;
  deep.max_depth = 4;
  CHECK(mse(fit_tree(x, y, deep), x, y) <= mse(fit_tree(x, y, shallow), x, y) + 1e-12);
}

TEST_CASE("boosting starts at the mean and improves with stages") {
  Rng rng(5);
  const std::size_t n = 300;
  Matrix x(n, 2);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-3.0, 3.0);
    x(i, 1) = rng.normal();
    y[i] = std::sin(x(i, 0)) + 0.05 * rng.normal();
  }
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(n);

  GbmConfig few;
  few.n_trees = 1;
  const BoostedModel one = fit_gbm(x, y, few);
  CHECK(one.init == doctest::Approx(ybar));

  GbmConfig many;
  many.n_trees = 100;
  const BoostedModel full = fit_gbm(x, y, many);
  double err_one = 0.0, err_full = 0.0;
  const auto p1 = one.predict(x);
  const auto pf = full.predict(x);
  for (std::size_t i = 0; i < n; ++i) {
    err_one += (p1[i] - y[i]) * (p1[i] - y[i]);
    err_full += (pf[i] - y[i]) * (pf[i] - y[i]);
  }
  CHECK(err_full < err_one);

  const auto imp = full.importance();
  double sum = 0.0;
  for (double v : imp) sum += v;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(imp[0] > 0.8);
}

TEST_CASE("tree and boosting fits are deterministic") {
  Rng rng(6);
  Matrix x(50, 2);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    y[i] = x(i, 0) + rng.normal();
  }
  const BoostedModel a = fit_gbm(x, y, {});
  const BoostedModel b = fit_gbm(x, y, {});
  CHECK(a.predict(x) == b.predict(x));
}
