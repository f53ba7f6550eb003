#pragma once

#include <Eigen/Dense>
#include <vector>

#include "knocksim/rng.hpp"

namespace knocksim {

struct LassoOptions {
  double tol = 1e-8;        // max coordinate change per sweep
  int max_sweeps = 100000;  // full cyclic sweeps
  // Recomputes the objective after every sweep and throws if it increases
  // beyond roundoff. Off by default (it doubles the cost of a fit).
  bool check_objective_monotone = false;
};

struct LassoFit {
  Eigen::VectorXd coef;      // minimizer of (1/2n)|Y - A theta|^2 + lambda |theta|_1
  Eigen::VectorXd debiased;  // filled by debias(); empty until then
  double lambda = 0.0;
  int support_size = 0;      // entries with |coef_j| >= 1e-10
  double d_factor = 0.0;     // d with 1/d = 1 - support_size / n
  double objective = 0.0;
  double kkt_residual = 0.0; // worst stationarity violation at exit
  bool converged = true;     // false when the KKT residual exceeds 1e-6
  int sweeps = 0;
};

// Cyclic coordinate descent with exact soft-threshold updates. Columns that
// are identically zero keep coefficient zero. A fit that exits with a KKT
// residual above 1e-6 is returned with converged = false.
LassoFit fit_lasso_cd(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                      double lambda, const LassoOptions& opts = {});

// Warm-started fits along a descending lambda grid; coefs[i] solves grid[i].
std::vector<Eigen::VectorXd> lasso_path(const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& y,
                                        const std::vector<double>& grid,
                                        const LassoOptions& opts = {});

// Debiased coefficients theta_u = theta + (d/n) P A^T (y - A theta) with
// 1/d = 1 - support/n; precision is the population precision of the design
// (Sigma^-1, or the extended precision when A carries knockoff columns).
// Throws numeric_error when support_size >= n.
Eigen::VectorXd debias(const LassoFit& fit, const Eigen::MatrixXd& A,
                       const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& precision);

// 50 log-spaced values from lambda_max = (1/n)|A^T y|_inf down to
// lambda_max * ratio, descending.
std::vector<double> default_lambda_grid(const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& y,
                                        int count = 50, double ratio = 0.01);

// k-fold cross validation on mean squared prediction error; fold assignment
// shuffles indices with the given stream; ties break toward larger lambda.
// The grid must be nonempty, positive and strictly descending.
double cv_lambda(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, int folds,
                 const std::vector<double>& grid, RngStream& rng,
                 const LassoOptions& opts = {});

}  // namespace knocksim
