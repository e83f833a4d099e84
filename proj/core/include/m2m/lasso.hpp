#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "m2m/matrix.hpp"

namespace m2m {

/// L1-penalized least squares with the sum-of-squares loss kept
/// unnormalized:
///
///   minimize  lambda * ||beta||_1 + sum_i (y_i - b0 - x_i . beta)^2
///
/// The intercept b0 is never penalized. Solved by cyclic coordinate
/// descent with an active-set strategy and warm starts along a
/// regularization path.
struct LassoConfig {
  double tol = 1e-7;       // max parameter change per sweep to declare convergence
  int max_sweeps = 10000;
  int cv_folds = 5;
  int n_lambdas = 100;
  double eps_ratio = 1e-3;  // lambda_min = eps_ratio * lambda_max
  bool record_objective = false;
};

struct LassoFit {
  double intercept = 0.0;
  std::vector<double> beta;
  double lambda = 0.0;
  int sweeps = 0;
  bool converged = true;
  /// Objective value after every sweep; filled only when
  /// LassoConfig::record_objective is set.
  std::vector<double> objective_trace;

  double predict_row(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& x) const;
  double l1_norm() const;
  int n_nonzero() const;
};

/// sign(z) * max(|z| - gamma, 0)
double soft_threshold(double z, double gamma);

/// lambda * ||beta||_1 + SSE, the quantity fit_lasso minimizes.
double lasso_objective(const Matrix& x, std::span<const double> y, const LassoFit& fit);

/// Smallest penalty for which the all-zero coefficient vector is optimal:
/// 2 * max_j |x_j . (y - mean(y))|.
double lambda_max(const Matrix& x, std::span<const double> y);

/// Descending log-spaced grid from lambda_max down to
/// eps_ratio * lambda_max. A response orthogonal to every column gives the
/// degenerate single-point path {0}.
std::vector<double> lambda_path(const Matrix& x, std::span<const double> y,
                                int n_lambdas, double eps_ratio);

LassoFit fit_lasso(const Matrix& x, std::span<const double> y, double lambda,
                   const LassoConfig& cfg = {});

/// Warm-started fits for a descending lambda grid, one per entry.
std::vector<LassoFit> fit_lasso_path(const Matrix& x, std::span<const double> y,
                                     std::span<const double> lambdas,
                                     const LassoConfig& cfg = {});

/// Largest stationarity violation of a fit: for zero coefficients the
/// overshoot of |x_j . r| past lambda/2, for nonzero ones the distance of
/// x_j . r from (lambda/2) * sign(beta_j), and the residual-mean condition
/// for the intercept. Optimal fits give (numerically) zero.
double kkt_violation(const Matrix& x, std::span<const double> y, const LassoFit& fit);

struct CvLassoResult {
  LassoFit fit;              // refit on all rows at best_lambda
  double best_lambda = 0.0;
  std::vector<double> lambdas;    // descending
  std::vector<double> cv_errors;  // mean held-out MSE per lambda
};

/// K-fold cross-validated lambda selection over the automatic path, ties
/// resolved toward the stronger penalty. Deterministic in (data, cfg, seed).
/// A constant response short-circuits to an intercept-only fit.
CvLassoResult cv_lasso(const Matrix& x, std::span<const double> y,
                       const LassoConfig& cfg, std::uint64_t seed);

}  // namespace m2m
