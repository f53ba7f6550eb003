#pragma once

#include <Eigen/Dense>
#include <string>

#include "knocksim/covariance.hpp"
#include "knocksim/rng.hpp"

namespace knocksim {

enum class Mechanism { equi, asdp, ci };

std::string mechanism_name(Mechanism m);
Mechanism mechanism_from_name(const std::string& name);

enum class EquiRule { paper_default, scaled };

// Equicorrelated s-vector. paper_default: s_j = min(2 lambda_min(Sigma), 1),
// requires unit diagonal. scaled: s_j = a * lambda_min(Sigma) for a in (0, 2].
// Both are pulled strictly inside the feasibility boundary when needed (see
// feasible_s).
Eigen::VectorXd equi_s(const CovMatrix& c, EquiRule rule, double a = 1.0);

// Conditional-independence s-vector: s_j = 1 / P_jj, the expected conditional
// variance of X_j given the other coordinates. Throws when Sigma is singular.
Eigen::VectorXd ci_s(const CovMatrix& c);

struct CiExistence {
  bool exists = false;       // 2 diag(diag(P)) - P is PSD
  double min_pivot = 0.0;    // witness: most negative pivot of that matrix
  bool tree_pattern = false; // sufficient condition 1: P has forest pattern
  bool diag_dominant = false;// sufficient condition 2: P diagonally dominant
};

// Existence test for the CI knockoff: the precision matrix must stay PSD
// after flipping the signs of its off-diagonal entries.
CiExistence ci_exists(const CovMatrix& c);

struct AsdpResult {
  Eigen::VectorXd s;
  double gamma = 0.0;  // scale factor selected by the bisection
};

// ASDP s-vector with the diagonal approximation Sigma_a = I (unit-diagonal
// Sigma required): step 1 gives s_hat = 1; step 2 finds the largest
// gamma in [0, 1] with diag(gamma s_hat) <= 2 Sigma by bisection to absolute
// tolerance 1e-6, and s = gamma * s_hat (then pulled strictly feasible).
AsdpResult asdp_s(const CovMatrix& c);

// Shrinks s multiplicatively (factors 1 - 1e-7, 1 - 1e-6, ...) until
// 2 Sigma - diag(s) has a strictly positive pivot margin, so that the joint
// covariance of [X, Xt] stays invertible for the debiasing step. Returns s
// unchanged when the margin already holds.
Eigen::VectorXd feasible_s(const CovMatrix& c, Eigen::VectorXd s);

// Gaussian knockoff sampler state: the extended covariance and the
// conditional law of Xt given X.
struct KnockoffSpec {
  Mechanism mechanism = Mechanism::equi;
  Eigen::VectorXd s;
  Eigen::MatrixXd sigma_ext;      // 2p x 2p, blocks [[S, S-D], [S-D, S]]
  Eigen::MatrixXd cond_mean_map;  // C = (Sigma - diag(s)) Sigma^-1
  Eigen::MatrixXd cond_cov_chol;  // factor of V = Sigma - C (Sigma - diag(s))

  int p() const { return static_cast<int>(s.size()); }
};

// Assembles the spec after checking 0 <= diag(s) <= 2 Sigma; V is clamped to
// PSD by zeroing slightly negative pivots. Throws numeric_error when the
// feasibility condition fails (message carries the most negative pivot).
KnockoffSpec extend_covariance(const CovMatrix& c, Eigen::VectorXd s,
                               Mechanism mechanism);

// Builds the spec for a mechanism with its default rule (equi uses
// paper_default).
KnockoffSpec make_knockoff_spec(const CovMatrix& c, Mechanism mechanism);

// Inverse of the extended covariance. Throws numeric_error when sigma_ext is
// numerically singular (e.g. s = 0).
Eigen::MatrixXd extended_precision(const KnockoffSpec& spec);

// Row i of the result is C x_i + L_v z_i with z_i ~ N(0, I_p), so that
// jointly [x_i, xt_i] ~ N(0, sigma_ext).
Eigen::MatrixXd sample_knockoffs(const KnockoffSpec& spec,
                                 const Eigen::MatrixXd& X, RngStream& rng);

}  // namespace knocksim
