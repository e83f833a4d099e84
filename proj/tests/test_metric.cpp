#include <doctest.h>

#include <cmath>

#include "m2m/matching.hpp"
#include "m2m/metric.hpp"
#include "m2m/rng.hpp"

using namespace m2m;

namespace {

// Noise-free per-arm linear outcomes with disjoint supports: arm 0 responds
// to column 0 only, arm 1 to column 1 only. Cross-validated L1 fits on
// either arm recover (essentially) the right single coefficient.
struct TwoArmLinear {
  Matrix x;
  std::vector<double> y;
  std::vector<int> t;
};

TwoArmLinear two_arm_linear(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  TwoArmLinear d;
  d.x = Matrix(n, p);
  d.y.resize(n);
  d.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) d.x(i, j) = rng.normal();
    d.t[i] = i % 2;
    d.y[i] = d.t[i] == 0 ? 4.0 * d.x(i, 0) : 4.0 * d.x(i, 1);
    d.y[i] += 0.01 * rng.normal();
  }
  return d;
}

}  // namespace

TEST_CASE("uniform metric spreads weight equally") {
  const DistanceMetric m = uniform_metric(4);
  CHECK(m.weights == std::vector<double>(4, 0.25));
  CHECK(m.source == MetricSource::uniform);
  CHECK(m.active_columns() == std::vector<int>{0, 1, 2, 3});
  CHECK(m.weight_sum() == doctest::Approx(1.0));
}

TEST_CASE("oracle metric is an indicator on the support") {
  const std::vector<int> support{0, 2};
  const DistanceMetric m = oracle_metric(support, 3);
  CHECK(m.weights == std::vector<double>{1.0, 0.0, 1.0});
  CHECK(m.active_columns() == std::vector<int>{0, 2});
  const std::vector<int> bad{3};
  CHECK_THROWS(oracle_metric(bad, 3));
  const std::vector<int> empty;
  CHECK_THROWS(oracle_metric(empty, 3));
}

TEST_CASE("feature selection binarizes positive weights") {
  DistanceMetric graded;
  graded.weights = {0.6, 0.0, 0.4};
  graded.source = MetricSource::lcm;
  const DistanceMetric m = feature_select_metric(graded);
  CHECK(m.weights == std::vector<double>{1.0, 0.0, 1.0});
  CHECK(m.source == MetricSource::feature_select);
}

TEST_CASE("coefficient metric averages normalized per-arm importances") {
  const TwoArmLinear d = two_arm_linear(400, 6, 17);
  const DistanceMetric m = learn_lcm_metric(d.x, d.y, d.t, {}, 3);
  CHECK(m.source == MetricSource::lcm);
  CHECK(m.weight_sum() == doctest::Approx(1.0));
  // Each arm concentrates on its own column; the average puts about half
  // the total weight on each.
  CHECK(m.weights[0] > 0.4);
  CHECK(m.weights[1] > 0.4);
  for (std::size_t j = 2; j < 6; ++j) CHECK(m.weights[j] < 0.05);
}

TEST_CASE("coefficient metric is deterministic") {
  const TwoArmLinear d = two_arm_linear(200, 5, 23);
  const DistanceMetric a = learn_lcm_metric(d.x, d.y, d.t, {}, 9);
  const DistanceMetric b = learn_lcm_metric(d.x, d.y, d.t, {}, 9);
  CHECK(a.weights == b.weights);
}

TEST_CASE("per-arm metrics keep each arm's own support") {
  const TwoArmLinear d = two_arm_linear(400, 6, 29);
  const auto ms = learn_metalearner_metrics(d.x, d.y, d.t, {}, 3);
  CHECK(ms[0].source == MetricSource::metalearner_arm0);
  CHECK(ms[1].source == MetricSource::metalearner_arm1);
  CHECK(ms[0].weights[0] > 0.9);
  CHECK(ms[0].weights[1] < 0.05);
  CHECK(ms[1].weights[1] > 0.9);
  CHECK(ms[1].weights[0] < 0.05);
  CHECK(ms[0].weight_sum() == doctest::Approx(1.0));
  CHECK(ms[1].weight_sum() == doctest::Approx(1.0));
}

TEST_CASE("tree metric finds nonlinear signal a linear fit misses") {
  Rng rng(31);
  const std::size_t n = 600, p = 5;
  Matrix x(n, p);
  std::vector<double> y(n);
  std::vector<int> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.normal(0.0, std::sqrt(2.5));
    t[i] = i % 2;
    y[i] = x(i, 2) * x(i, 2) + 10.0 * t[i] + 0.1 * rng.normal();
  }
  const DistanceMetric m = learn_tree_metric(x, y, t, {});
  CHECK(m.source == MetricSource::tree);
  CHECK(m.weight_sum() == doctest::Approx(1.0));
  CHECK(m.weights[2] > 0.8);
}

TEST_CASE("linear-response distance bound holds for coefficient metrics") {
  // For any linear response f(x) = b . x, the |b|-weighted L1 distance
  // dominates |f(x) - f(x')| for every pair. Hammer it with random draws.
  Rng rng(37);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t p = 1 + rng.below(6);
    std::vector<double> beta(p), w(p);
    for (std::size_t j = 0; j < p; ++j) {
      beta[j] = rng.normal(0.0, 3.0);
      if (rng.bernoulli(0.3)) beta[j] = 0.0;
      w[j] = std::abs(beta[j]);
    }
    for (int pair = 0; pair < 100; ++pair) {
      std::vector<double> a(p), b(p);
      double fa = 0.0, fb = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        a[j] = rng.uniform(-5.0, 5.0);
        b[j] = rng.uniform(-5.0, 5.0);
        fa += beta[j] * a[j];
        fb += beta[j] * b[j];
      }
      CHECK(weighted_l1_distance(w, a, b) >= std::abs(fa - fb) - 1e-9);
    }
  }
}

TEST_CASE("radius bound on responses is attained at the best coordinate") {
  // Over the weighted-L1 ball of radius eps around x, a linear response
  // moves at most eps * max_l |beta_l| / w_l, at least eps when the weight
  // vector's L1 norm matches the coefficients'. Brute-force sampling inside
  // the ball stays below the bound and vertex candidates attain it.
  Rng rng(41);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t p = 1 + rng.below(3);
    std::vector<double> beta(p), w(p);
    double beta_l1 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      beta[j] = rng.normal(0.0, 2.0);
      beta_l1 += std::abs(beta[j]);
      w[j] = 0.05 + rng.uniform();
    }
    if (beta_l1 == 0.0) continue;
    double w_l1 = 0.0;
    for (double v : w) w_l1 += v;
    for (auto& v : w) v *= beta_l1 / w_l1;  // matched L1 norms

    const double eps = 0.5 + rng.uniform();
    double bound = 0.0;
    for (std::size_t j = 0; j < p; ++j) bound = std::max(bound, std::abs(beta[j]) / w[j]);
    bound *= eps;
    CHECK(bound >= eps - 1e-12);

    double best = 0.0;
    for (int draw = 0; draw < 2000; ++draw) {
      // random signed point with weighted-L1 norm exactly eps
      std::vector<double> u(p);
      double total = 0.0;
      for (auto& v : u) {
        v = rng.uniform();
        total += v;
      }
      double f = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double delta = (rng.bernoulli(0.5) ? 1.0 : -1.0) * eps * u[j] /
                             (total * w[j]);
        f += beta[j] * delta;
      }
      CHECK(std::abs(f) <= bound * (1.0 + 1e-12) + 1e-12);
      best = std::max(best, std::abs(f));
    }
    for (std::size_t j = 0; j < p; ++j) {
      const double vertex = std::abs(beta[j]) * eps / w[j];
      CHECK(vertex <= bound * (1.0 + 1e-12));
      best = std::max(best, vertex);
    }
    CHECK(best >= 0.99 * bound);
  }
}

TEST_CASE("zero-signal data falls back to uniform weights") {
  Rng rng(43);
  const std::size_t n = 60, p = 4;
  Matrix x(n, p);
  std::vector<double> y(n);
  std::vector<int> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.normal();
    t[i] = i % 2;
    y[i] = 5.0;  // constant outcome; every coefficient shrinks away
  }
  const DistanceMetric m = learn_lcm_metric(x, y, t, {}, 1);
  CHECK(m.source == MetricSource::uniform);
  CHECK(m.weights == std::vector<double>(p, 0.25));
}
