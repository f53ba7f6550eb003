#include "knocksim/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "knocksim/errors.hpp"

namespace knocksim {

namespace {

constexpr double kZeroCoef = 1e-10;  // |coef| below this counts as zero
constexpr double kKktTol = 1e-6;

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

double objective_value(const Eigen::VectorXd& residual,
                       const Eigen::VectorXd& coef, double lambda, int n) {
  return residual.squaredNorm() / (2.0 * n) + lambda * coef.lpNorm<1>();
}

// One cyclic pass over the given coordinates; returns the largest coordinate
// change. residual is kept consistent with coef incrementally.
double cd_sweep(const Eigen::MatrixXd& A, const Eigen::VectorXd& col_sq,
                double lambda, const std::vector<int>& coords,
                Eigen::VectorXd& coef, Eigen::VectorXd& residual) {
  const int n = static_cast<int>(A.rows());
  double max_change = 0.0;
  for (int j : coords) {
    if (col_sq[j] == 0.0) continue;
    double z = A.col(j).dot(residual) / n + col_sq[j] * coef[j];
    double updated = soft_threshold(z, lambda) / col_sq[j];
    double change = updated - coef[j];
    if (change != 0.0) {
      residual -= change * A.col(j);
      coef[j] = updated;
      max_change = std::max(max_change, std::abs(change));
    }
  }
  return max_change;
}

// Full sweeps alternate with sweeps restricted to the current support until
// a full sweep moves nothing beyond tol. Every sweep is an exact cyclic
// minimization pass, so the objective stays non-increasing throughout.
int run_cd(const Eigen::MatrixXd& A, const Eigen::VectorXd& col_sq,
           double lambda, const LassoOptions& opts, Eigen::VectorXd& coef,
           Eigen::VectorXd& residual) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(A.cols());
  std::vector<int> all(m);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> active;

  double prev_obj = opts.check_objective_monotone
                        ? objective_value(residual, coef, lambda, n)
                        : 0.0;
  int sweeps = 0;
  auto after_sweep = [&]() {
    ++sweeps;
    if (opts.check_objective_monotone) {
      double obj = objective_value(residual, coef, lambda, n);
      if (obj > prev_obj + 1e-10 * (1.0 + std::abs(prev_obj)))
        throw std::logic_error("coordinate descent objective increased");
      prev_obj = obj;
    }
  };

  while (sweeps < opts.max_sweeps) {
    double change = cd_sweep(A, col_sq, lambda, all, coef, residual);
    after_sweep();
    if (change < opts.tol) break;

    active.clear();
    for (int j = 0; j < m; ++j)
      if (coef[j] != 0.0) active.push_back(j);
    while (sweeps < opts.max_sweeps) {
      double inner = cd_sweep(A, col_sq, lambda, active, coef, residual);
      after_sweep();
      if (inner < opts.tol) break;
    }
  }
  return sweeps;
}

void check_inputs(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                  double lambda) {
  if (A.rows() < 1 || A.cols() < 1)
    throw std::invalid_argument("lasso: empty design");
  if (A.rows() != y.size())
    throw std::invalid_argument("lasso: y length does not match design");
  if (lambda < 0.0) throw std::invalid_argument("lasso: lambda must be >= 0");
}

LassoFit finalize_fit(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                      double lambda, Eigen::VectorXd coef, int sweeps) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(A.cols());

  LassoFit fit;
  fit.lambda = lambda;
  fit.sweeps = sweeps;

  // Recompute the residual exactly so the reported objective and KKT values
  // do not carry the incremental-update drift.
  Eigen::VectorXd residual = y - A * coef;
  Eigen::VectorXd grad = A.transpose() * residual / n;

  fit.support_size = 0;
  double violation = 0.0;
  for (int j = 0; j < m; ++j) {
    if (std::abs(coef[j]) >= kZeroCoef) {
      ++fit.support_size;
      double sign = coef[j] > 0 ? 1.0 : -1.0;
      violation = std::max(violation, std::abs(grad[j] - lambda * sign));
    } else {
      violation = std::max(violation, std::abs(grad[j]) - lambda);
    }
  }
  fit.kkt_residual = std::max(violation, 0.0);
  fit.converged = fit.kkt_residual <= kKktTol;
  fit.objective = objective_value(residual, coef, lambda, n);
  fit.d_factor = fit.support_size < n
                     ? 1.0 / (1.0 - static_cast<double>(fit.support_size) / n)
                     : std::numeric_limits<double>::infinity();
  fit.coef = std::move(coef);
  return fit;
}

}  // namespace

LassoFit fit_lasso_cd(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                      double lambda, const LassoOptions& opts) {
  check_inputs(A, y, lambda);
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(A.cols());
  Eigen::VectorXd col_sq(m);
  for (int j = 0; j < m; ++j) col_sq[j] = A.col(j).squaredNorm() / n;

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd residual = y;
  int sweeps = run_cd(A, col_sq, lambda, opts, coef, residual);
  return finalize_fit(A, y, lambda, std::move(coef), sweeps);
}

std::vector<Eigen::VectorXd> lasso_path(const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& y,
                                        const std::vector<double>& grid,
                                        const LassoOptions& opts) {
  check_inputs(A, y, grid.empty() ? 0.0 : grid.front());
  const int m = static_cast<int>(A.cols());
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd col_sq(m);
  for (int j = 0; j < m; ++j) col_sq[j] = A.col(j).squaredNorm() / n;

  std::vector<Eigen::VectorXd> coefs;
  coefs.reserve(grid.size());
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd residual = y;
  for (double lambda : grid) {
    run_cd(A, col_sq, lambda, opts, coef, residual);
    coefs.push_back(coef);
  }
  return coefs;
}

Eigen::VectorXd debias(const LassoFit& fit, const Eigen::MatrixXd& A,
                       const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& precision) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(A.cols());
  if (precision.rows() != m || precision.cols() != m)
    throw std::invalid_argument("debias: precision has wrong shape");
  if (fit.support_size >= n)
    throw numeric_error("debias: support size reached n, d factor undefined");
  double d = 1.0 / (1.0 - static_cast<double>(fit.support_size) / n);
  Eigen::VectorXd residual = y - A * fit.coef;
  return fit.coef + (d / n) * (precision * (A.transpose() * residual));
}

std::vector<double> default_lambda_grid(const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& y, int count,
                                        double ratio) {
  if (count < 1) throw std::invalid_argument("lambda grid: count must be >= 1");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("lambda grid: ratio must be in (0, 1)");
  const int n = static_cast<int>(A.rows());
  double lambda_max = (A.transpose() * y).cwiseAbs().maxCoeff() / n;
  if (lambda_max <= 0.0)
    throw numeric_error("lambda grid: A^T y is identically zero");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  for (int i = 0; i < count; ++i)
    grid[i] = lambda_max * std::pow(ratio, static_cast<double>(i) / (count - 1));
  return grid;
}

double cv_lambda(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, int folds,
                 const std::vector<double>& grid, RngStream& rng,
                 const LassoOptions& opts) {
  const int n = static_cast<int>(A.rows());
  if (folds < 2) throw std::invalid_argument("cv_lambda: folds must be >= 2");
  if (n < folds) throw std::invalid_argument("cv_lambda: n < folds");
  if (grid.empty()) throw std::invalid_argument("cv_lambda: empty grid");
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0))
      throw std::invalid_argument("cv_lambda: grid values must be positive");
    if (i > 0 && !(grid[i] < grid[i - 1]))
      throw std::invalid_argument("cv_lambda: grid must be strictly descending");
  }

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);

  std::vector<double> sse(grid.size(), 0.0);
  const int m = static_cast<int>(A.cols());
  for (int f = 0; f < folds; ++f) {
    int lo = static_cast<int>(static_cast<long long>(f) * n / folds);
    int hi = static_cast<int>(static_cast<long long>(f + 1) * n / folds);
    int n_val = hi - lo;
    int n_train = n - n_val;

    Eigen::MatrixXd a_train(n_train, m), a_val(n_val, m);
    Eigen::VectorXd y_train(n_train), y_val(n_val);
    int t = 0, v = 0;
    for (int i = 0; i < n; ++i) {
      int row = perm[i];
      if (i >= lo && i < hi) {
        a_val.row(v) = A.row(row);
        y_val[v++] = y[row];
      } else {
        a_train.row(t) = A.row(row);
        y_train[t++] = y[row];
      }
    }

    std::vector<Eigen::VectorXd> coefs = lasso_path(a_train, y_train, grid, opts);
    for (size_t g = 0; g < grid.size(); ++g)
      sse[g] += (y_val - a_val * coefs[g]).squaredNorm();
  }

  size_t best = 0;  // grid is descending, so ties resolve to the larger lambda
  for (size_t g = 1; g < grid.size(); ++g)
    if (sse[g] < sse[best]) best = g;
  return grid[best];
}

}  // namespace knocksim
