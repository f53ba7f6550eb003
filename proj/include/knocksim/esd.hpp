#pragma once

#include <Eigen/Dense>
#include <string>

#include "knocksim/covariance.hpp"
#include "knocksim/knockoffs.hpp"

namespace knocksim {

// Levy-Prokhorov distance between the empirical measure of `values` and a
// point mass at zero:
//   eps* = inf{ eps > 0 : #{j : v_j >= eps} / m <= eps }.
// Always <= 1. Throws std::invalid_argument on negative entries or m = 0.
double lp_distance_zero(const Eigen::VectorXd& values);

// Effective signal deficiency report: the diagonal sequence that feeds the
// LP distance, the common divisor applied first, and the resulting distance.
struct EsdReport {
  std::string procedure;
  Eigen::VectorXd values;
  double scale = 1.0;
  double lp = 0.0;
  // esd_equi only: the unclamped scalar functional lambda_max(P).
  double raw_scalar = 0.0;
};

// Lasso: values are the precision diagonal (P_jj)_j.
EsdReport esd_lasso(const CovMatrix& c, double scale);

// Generic knockoff: values are all 2p diagonal entries of the extended
// precision sigma_ext^-1.
EsdReport esd_knockoff_generic(const KnockoffSpec& spec, double scale);

// Equi-knockoff scalar functional lambda_max(P) = 1 / lambda_min(Sigma);
// reported raw and clamped to [0, 1] so it composes with LP-based reports.
EsdReport esd_equi(const CovMatrix& c);

// CI knockoff on tree/forest graphical models: values are (P_jj^2 Sigma_jj)_j,
// cross-checked against the first p diagonal entries of the explicit extended
// precision (they must agree within 1e-8). Throws numeric_error when the
// precision pattern is not a forest.
EsdReport esd_ci_tree(const CovMatrix& c, double scale);

}  // namespace knocksim
