#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "knocksim/rng.hpp"

namespace knocksim {

enum class CovKind { binary_tree, markov_chain, explicit_matrix };

// Structured or explicit covariance model for the Gaussian design.
//
// binary_tree: heap-ordered tree (node 1 is the root, node j hangs off
// floor(j/2)); every edge carries the same correlation rho and
// Sigma_ij = rho^distance(i, j).
// markov_chain: path graph with per-edge correlations rho_seq and
// Sigma_ij = prod of edge correlations between i and j.
// explicit_matrix: any symmetric PSD matrix, validated on build.
struct CovModel {
  CovKind kind = CovKind::explicit_matrix;
  int p = 0;
  double rho = 0.0;              // binary_tree
  std::vector<double> rho_seq;   // markov_chain, length p-1
  Eigen::MatrixXd matrix;        // explicit_matrix

  static CovModel binary_tree(int p, double rho);
  static CovModel markov_chain(std::vector<double> rho_seq);
  static CovModel explicit_matrix(Eigen::MatrixXd m);

  // Throws config_error when the invariants fail (|rho| >= 1, p < 1,
  // asymmetric explicit matrix, ...).
  void validate() const;
};

// Covariance with its cached semidefinite Cholesky factor and, when Sigma is
// nonsingular, its precision matrix.
struct CovMatrix {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd chol;       // lower triangular, chol * chol^T = sigma
  Eigen::MatrixXd precision;  // empty when sigma is numerically singular
  bool unit_diagonal = false;

  int dim() const { return static_cast<int>(sigma.rows()); }
  bool has_precision() const { return precision.size() > 0; }
};

struct PsdCholesky {
  bool psd = false;
  Eigen::MatrixXd factor;  // lower triangular; valid only when psd
  double min_pivot = 0.0;  // most negative pivot encountered (pre-clamp)
};

// Semidefinite Cholesky: pivots in [-1e-10 * scale, 0] are clamped to zero
// (rank-deficient PSD inputs are accepted); a pivot below that, or a
// non-vanishing column under a clamped pivot, reports NotPSD. scale is
// max|m|, or scale_hint when the matrix is a near-zero residual of a
// larger-scale computation (e.g. a conditional covariance).
// Throws std::invalid_argument for asymmetric input.
PsdCholesky cholesky_psd(const Eigen::MatrixXd& m, double scale_hint = 0.0);

// Builds Sigma and its factorizations from a model. Throws config_error on
// invalid models and numeric_error when an explicit matrix is not PSD.
CovMatrix build_cov(const CovModel& model);

// Wraps an already validated Sigma (used internally and by the extended
// covariance path). require_psd: throws numeric_error when Sigma is not PSD.
CovMatrix wrap_cov(Eigen::MatrixXd sigma);

// Precision of a strictly positive definite Sigma (min Cholesky pivot
// > 1e-12 * max|Sigma|). Throws numeric_error when singular.
Eigen::MatrixXd invert_spd(const CovMatrix& c);

// n i.i.d. rows of N(0, Sigma) via X = Z * chol^T; deterministic given the
// stream state.
Eigen::MatrixXd sample_mvn(const CovMatrix& c, int n, RngStream& rng);

// Maximum-weight spanning tree over edge weights -log(1 - r_ij^2) where r is
// the correlation derived from sample_cov; ties broken by lexicographic edge
// order. Returns 0-based (i, j) pairs, i < j. Throws numeric_error when an
// off-diagonal correlation reaches +-1.
std::vector<std::pair<int, int>> chow_liu_tree(const Eigen::MatrixXd& sample_cov);

// True when the off-diagonal entries with |m_ij| >= tol form a forest
// (no cycles) over the p nodes.
bool forest_pattern(const Eigen::MatrixXd& m, double tol = 1e-8);

struct StandardizedCov {
  CovMatrix cov;
  Eigen::VectorXd scale;  // sqrt of the original diagonal
};

// Rescales to unit diagonal: Sigma'_ij = Sigma_ij / sqrt(Sigma_ii Sigma_jj).
// Throws numeric_error on a nonpositive diagonal entry.
StandardizedCov standardize(const CovMatrix& c);

}  // namespace knocksim
