#include "m2m/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "m2m/dataset.hpp"
#include "m2m/rng.hpp"

namespace m2m {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

double LassoFit::predict_row(std::span<const double> x) const {
  if (x.size() != beta.size())
    throw std::runtime_error("lasso predict: feature count mismatch");
  double v = intercept;
  for (std::size_t j = 0; j < beta.size(); ++j) v += beta[j] * x[j];
  return v;
}

std::vector<double> LassoFit::predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
  return out;
}

double LassoFit::l1_norm() const {
  double s = 0.0;
  for (double b : beta) s += std::abs(b);
  return s;
}

int LassoFit::n_nonzero() const {
  int k = 0;
  for (double b : beta) k += b != 0.0;
  return k;
}

double lasso_objective(const Matrix& x, std::span<const double> y, const LassoFit& fit) {
  double sse = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = y[i] - fit.predict_row(x.row(i));
    sse += r * r;
  }
  return fit.lambda * fit.l1_norm() + sse;
}

namespace {

/// Column-contiguous copy of the design so coordinate sweeps walk memory
/// linearly (Matrix is row major).
struct Columns {
  std::size_t n = 0, p = 0;
  std::vector<double> data;   // column j at data[j*n .. j*n+n)
  std::vector<double> sq;     // sum of squares per column

  Columns(const Matrix& x) : n(x.rows()), p(x.cols()), data(n * p), sq(p, 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) data[j * n + i] = x(i, j);
    for (std::size_t j = 0; j < p; ++j) {
      const double* c = col(j);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += c[i] * c[i];
      sq[j] = s;
    }
  }
  const double* col(std::size_t j) const { return data.data() + j * n; }
};

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

/// One coordinate pass. When active_only is set, zero coefficients are
/// skipped. Returns the largest single-parameter change.
double sweep(const Columns& cols, std::vector<double>& beta, double& intercept,
             std::vector<double>& r, double half_lambda, bool active_only) {
  const std::size_t n = cols.n;
  double max_delta = 0.0;
  double mu = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(n);
  intercept += mu;
  for (double& ri : r) ri -= mu;
  max_delta = std::abs(mu);
  for (std::size_t j = 0; j < cols.p; ++j) {
    if (active_only && beta[j] == 0.0) continue;
    if (cols.sq[j] == 0.0) continue;
    const double* xj = cols.col(j);
    const double z = dot(xj, r.data(), n) + cols.sq[j] * beta[j];
    const double bj = soft_threshold(z, half_lambda) / cols.sq[j];
    const double delta = bj - beta[j];
    if (delta != 0.0) {
      beta[j] = bj;
      for (std::size_t i = 0; i < n; ++i) r[i] -= xj[i] * delta;
      max_delta = std::max(max_delta, std::abs(delta));
    }
  }
  return max_delta;
}

LassoFit fit_on_columns(const Columns& cols, std::span<const double> y, double lambda,
                        const LassoConfig& cfg, const std::vector<double>* warm,
                        double warm_intercept) {
  LassoFit fit;
  fit.lambda = lambda;
  fit.beta.assign(cols.p, 0.0);
  if (warm) {
    fit.beta = *warm;
    fit.intercept = warm_intercept;
  }
  std::vector<double> r(y.begin(), y.end());
  for (std::size_t j = 0; j < cols.p; ++j) {
    if (fit.beta[j] == 0.0) continue;
    const double* xj = cols.col(j);
    for (std::size_t i = 0; i < cols.n; ++i) r[i] -= xj[i] * fit.beta[j];
  }
  for (double& ri : r) ri -= fit.intercept;

  const double half_lambda = lambda / 2.0;
  auto record = [&] {
    if (!cfg.record_objective) return;
    double l1 = 0.0;
    for (double b : fit.beta) l1 += std::abs(b);
    fit.objective_trace.push_back(lambda * l1 + dot(r.data(), r.data(), cols.n));
  };

  bool active_only = warm != nullptr;  // warm starts usually have the support right
  while (true) {
    const double delta = sweep(cols, fit.beta, fit.intercept, r, half_lambda, active_only);
    ++fit.sweeps;
    record();
    if (fit.sweeps >= cfg.max_sweeps) {
      fit.converged = false;
      warn("lasso: coordinate descent hit the sweep limit (lambda=" +
           std::to_string(lambda) + ")");
      break;
    }
    if (delta > cfg.tol) continue;
    if (active_only) {
      // Inner loop settled; one full pass checks the excluded coordinates.
      const double full = sweep(cols, fit.beta, fit.intercept, r, half_lambda, false);
      ++fit.sweeps;
      record();
      if (full <= cfg.tol) break;
    } else {
      break;
    }
    active_only = true;
  }
  return fit;
}

std::vector<LassoFit> path_on_columns(const Columns& cols, std::span<const double> y,
                                      std::span<const double> lambdas,
                                      const LassoConfig& cfg) {
  std::vector<LassoFit> fits;
  fits.reserve(lambdas.size());
  const std::vector<double>* warm = nullptr;
  double warm_b0 = 0.0;
  for (double lambda : lambdas) {
    fits.push_back(fit_on_columns(cols, y, lambda, cfg, warm, warm_b0));
    warm = &fits.back().beta;
    warm_b0 = fits.back().intercept;
  }
  return fits;
}

}  // namespace

double lambda_max(const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) throw std::runtime_error("lambda_max: row count mismatch");
  const double ybar =
      std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double best = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double g = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) g += x(i, j) * (y[i] - ybar);
    best = std::max(best, std::abs(g));
  }
  return 2.0 * best;
}

std::vector<double> lambda_path(const Matrix& x, std::span<const double> y,
                                int n_lambdas, double eps_ratio) {
  if (n_lambdas < 1) throw std::runtime_error("lambda_path: need at least one point");
  if (!(eps_ratio > 0.0 && eps_ratio < 1.0))
    throw std::runtime_error("lambda_path: eps_ratio must be in (0, 1)");
  const double lmax = lambda_max(x, y);
  if (lmax <= 0.0) return {0.0};
  if (n_lambdas == 1) return {lmax};
  std::vector<double> path(n_lambdas);
  const double log_max = std::log(lmax);
  const double log_min = std::log(lmax * eps_ratio);
  for (int k = 0; k < n_lambdas; ++k)
    path[k] = std::exp(log_max + (log_min - log_max) * k / (n_lambdas - 1));
  path.front() = lmax;  // exact endpoint, not its exp(log(.)) round trip
  return path;
}

LassoFit fit_lasso(const Matrix& x, std::span<const double> y, double lambda,
                   const LassoConfig& cfg) {
  if (x.rows() != y.size()) throw std::runtime_error("fit_lasso: row count mismatch");
  if (x.rows() == 0) throw std::runtime_error("fit_lasso: empty design");
  if (lambda < 0.0) throw std::runtime_error("fit_lasso: negative lambda");
  Columns cols(x);
  return fit_on_columns(cols, y, lambda, cfg, nullptr, 0.0);
}

std::vector<LassoFit> fit_lasso_path(const Matrix& x, std::span<const double> y,
                                     std::span<const double> lambdas,
                                     const LassoConfig& cfg) {
  if (x.rows() != y.size())
    throw std::runtime_error("fit_lasso_path: row count mismatch");
  Columns cols(x);
  return path_on_columns(cols, y, lambdas, cfg);
}

double kkt_violation(const Matrix& x, std::span<const double> y, const LassoFit& fit) {
  const std::size_t n = x.rows();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - fit.predict_row(x.row(i));
  double rsum = std::accumulate(r.begin(), r.end(), 0.0);
  double worst = std::abs(rsum) / static_cast<double>(n);
  const double half_lambda = fit.lambda / 2.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i) g += x(i, j) * r[i];
    if (fit.beta[j] == 0.0)
      worst = std::max(worst, std::abs(g) - half_lambda);
    else
      worst = std::max(worst, std::abs(g - half_lambda * (fit.beta[j] > 0 ? 1.0 : -1.0)));
  }
  return std::max(worst, 0.0);
}

CvLassoResult cv_lasso(const Matrix& x, std::span<const double> y,
                       const LassoConfig& cfg, std::uint64_t seed) {
  const std::size_t n = x.rows();
  if (n != y.size()) throw std::runtime_error("cv_lasso: row count mismatch");
  CvLassoResult out;
  if (n < 2) {
    warn("cv_lasso: fewer than 2 rows; returning an all-zero fit");
    out.fit.beta.assign(x.cols(), 0.0);
    out.fit.intercept = n == 1 ? y[0] : 0.0;
    out.lambdas = {0.0};
    out.cv_errors = {0.0};
    return out;
  }
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (*ymin == *ymax) {
    warn("cv_lasso: constant response; returning an intercept-only fit");
    out.fit.beta.assign(x.cols(), 0.0);
    out.fit.intercept = *ymin;
    out.lambdas = {0.0};
    out.cv_errors = {0.0};
    return out;
  }

  out.lambdas = lambda_path(x, y, cfg.n_lambdas, cfg.eps_ratio);
  const std::size_t L = out.lambdas.size();
  const int eff_folds =
      std::clamp(cfg.cv_folds, 2, static_cast<int>(std::min<std::size_t>(n, 1u << 20)));
  FoldPlan folds = make_folds(n, eff_folds, mix_seed(seed, 0x63766c6173ULL));

  std::vector<double> fold_mse_sums(L, 0.0);
  for (int f = 0; f < eff_folds; ++f) {
    const std::vector<int> train = folds.rows_not_in(f);
    const std::vector<int> test = folds.rows_in(f);
    Matrix xtr = gather_rows(x, train);
    std::vector<double> ytr = gather_values(y, std::span<const int>(train));
    Columns cols(xtr);
    std::vector<LassoFit> fits = path_on_columns(cols, ytr, out.lambdas, cfg);
    for (std::size_t l = 0; l < L; ++l) {
      double sse = 0.0;
      for (int i : test) {
        const double e = y[i] - fits[l].predict_row(x.row(static_cast<std::size_t>(i)));
        sse += e * e;
      }
      fold_mse_sums[l] += sse / static_cast<double>(test.size());
    }
  }
  out.cv_errors.resize(L);
  for (std::size_t l = 0; l < L; ++l) out.cv_errors[l] = fold_mse_sums[l] / eff_folds;

  // Descending path, strict improvement required: ties keep the larger lambda.
  std::size_t best = 0;
  for (std::size_t l = 1; l < L; ++l)
    if (out.cv_errors[l] < out.cv_errors[best]) best = l;
  out.best_lambda = out.lambdas[best];

  Columns cols(x);
  std::span<const double> head(out.lambdas.data(), best + 1);
  std::vector<LassoFit> full = path_on_columns(cols, y, head, cfg);
  out.fit = std::move(full.back());
  return out;
}

}  // namespace m2m
