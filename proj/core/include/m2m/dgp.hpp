#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "m2m/dataset.hpp"

namespace m2m {

/// logistic sigmoid 1 / (1 + e^-x)
double expit(double x);

struct DgpParams {
  std::string name;
  std::size_t n = 0;
  std::size_t p = 0;
  int k = 0;      // number of outcome-relevant covariates (quadratic)
  int kappa = 0;  // number of treatment-relevant covariates (quadratic)
  std::uint64_t seed = 0;
  // Realized coefficient draws (quadratic only).
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<int> s;
};

/// A synthetic dataset bundled with its noise-free potential outcomes.
struct DgpSample {
  Dataset dataset;
  std::vector<double> y0;  // structural Y(0), no outcome noise
  std::vector<double> y1;
  std::vector<double> true_cate;  // y1 - y0
  double true_ate = 0.0;          // mean of true_cate
  DgpParams params;

  /// 0-based indices of the outcome-relevant covariates.
  std::vector<int> important_columns() const;
};

/// Covariates Uniform(-pi, pi); Y(0) = sin X1, Y(1) = sin X1 - sin X2;
/// outcome noise variance 0.1; treatment from expit(X1 + X2 + noise) > 1/2.
DgpSample gen_sine(std::size_t n, std::size_t p, std::uint64_t seed);

/// Covariates Uniform(-3, 3); Y(0) = 2 e^X1 - e^X2 - e^X3,
/// Y(1) = Y(0) + e^X4; outcome noise variance 1.
DgpSample gen_exponential(std::size_t n, std::size_t p, std::uint64_t seed);

/// Covariates Normal(mean 1, variance 1.5); Y(0) linear in the first k
/// columns with random signs/magnitudes; the effect adds a second linear
/// term plus the full k-by-k product sum (squares and both cross-term
/// orders included); treatment depends on the first kappa columns.
DgpSample gen_quadratic(std::size_t n, std::size_t p, int k, int kappa,
                        std::uint64_t seed);

/// Covariates Normal(0, variance 2.5); Y(0) = X1^2, Y(1) = X1^2 + 10;
/// treatment a fair coin. The only informative covariate is X1 and the
/// true effect is exactly 10 everywhere.
DgpSample gen_basic_quadratic(std::size_t n, std::size_t p, std::uint64_t seed);

/// Dispatch by name: sine, exponential, quadratic, basic-quadratic.
/// k and kappa are ignored by generators that do not use them.
DgpSample generate(const std::string& name, std::size_t n, std::size_t p, int k,
                   int kappa, std::uint64_t seed);

}  // namespace m2m
