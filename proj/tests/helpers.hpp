#pragma once

// Shared test utilities: random structured models and independent oracles.
// Everything here stays independent of the library code paths it checks
// (dense LU inverses instead of Cholesky solves, literal-definition scans
// instead of the sorted-scan implementation).

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "knocksim/covariance.hpp"
#include "knocksim/rng.hpp"

namespace testutil {

// Random tree covariance: node j attaches to a uniform earlier node, edge
// correlations have |rho| in [lo, hi] with random sign. Unit diagonal.
// Correlations multiply along tree paths, and since parents precede children
// Sigma_ij = Sigma_{i,parent(j)} * rho_j fills the matrix in one pass.
inline Eigen::MatrixXd random_tree_cov(int p, knocksim::RngStream& rng,
                                       double lo = 0.15, double hi = 0.85) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
  for (int j = 1; j < p; ++j) {
    int parent = static_cast<int>(rng.below(j));
    double rho = lo + (hi - lo) * rng.uniform();
    if (rng.uniform() < 0.5) rho = -rho;
    for (int i = 0; i < j; ++i)
      sigma(i, j) = sigma(j, i) =
          (i == parent ? rho : sigma(i, parent) * rho);
  }
  return sigma;
}

// Random chain covariance with distinct |rho_j| bounded away from 0 and 1.
inline std::vector<double> random_chain_rhos(int p, knocksim::RngStream& rng,
                                             double lo = 0.15,
                                             double hi = 0.85) {
  std::vector<double> rhos(p - 1);
  for (double& r : rhos) {
    r = lo + (hi - lo) * rng.uniform();
    if (rng.uniform() < 0.5) r = -r;
  }
  return rhos;
}

// Random symmetric matrix whose off-diagonal pattern is a forest; entries
// need not make it PSD (the eigenvalue-flip lemma holds regardless).
inline Eigen::MatrixXd random_forest_symmetric(int p,
                                               knocksim::RngStream& rng) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) m(j, j) = 0.5 + 2.5 * rng.uniform();
  for (int j = 1; j < p; ++j) {
    if (rng.uniform() < 0.15) continue;  // start a new component
    int parent = static_cast<int>(rng.below(j));
    double v = (0.2 + 1.8 * rng.uniform()) * (rng.uniform() < 0.5 ? -1 : 1);
    m(j, parent) = m(parent, j) = v;
  }
  return m;
}

// Random diagonally dominant precision matrix (hence PD).
inline Eigen::MatrixXd random_diag_dominant_precision(
    int p, knocksim::RngStream& rng) {
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      m(i, j) = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform();
  m = ((m + m.transpose()) / 2.0).eval();
  for (int j = 0; j < p; ++j) {
    double off = m.row(j).cwiseAbs().sum() - std::abs(m(j, j));
    m(j, j) = off + 0.1 + rng.uniform();
  }
  return m;
}

// Dense inverse through a different factorization than the library's.
inline Eigen::MatrixXd brute_force_inverse(const Eigen::MatrixXd& m) {
  return m.fullPivLu().inverse();
}

// Literal-definition oracle for the LP distance to a point mass at zero:
// probes every candidate epsilon (grid points k/m and the values themselves)
// with the raw feasibility test "#{v >= eps} / m <= eps", nudging just past
// the candidate to capture infima attained only in the limit.
inline double lp_oracle(const Eigen::VectorXd& values) {
  const int m = static_cast<int>(values.size());
  auto feasible = [&](double eps) {
    int count = 0;
    for (int j = 0; j < m; ++j)
      if (values[j] >= eps) ++count;
    return static_cast<double>(count) <= m * eps + 1e-9;
  };
  std::vector<double> candidates;
  for (int k = 0; k <= m; ++k) candidates.push_back(static_cast<double>(k) / m);
  for (int j = 0; j < m; ++j) candidates.push_back(values[j]);
  std::sort(candidates.begin(), candidates.end());
  for (double c : candidates) {
    if (feasible(c) || feasible(c + 1e-12 * (1.0 + c)))
      return std::min(c, 1.0);
  }
  return 1.0;
}

// Applies the knockoff swap permutation (j <-> j+p for j in subset) to the
// rows and columns of a 2p x 2p matrix.
inline Eigen::MatrixXd swap_permuted(const Eigen::MatrixXd& m,
                                     const std::vector<int>& subset) {
  const int p = static_cast<int>(m.rows()) / 2;
  std::vector<int> perm(2 * p);
  for (int j = 0; j < 2 * p; ++j) perm[j] = j;
  for (int j : subset) std::swap(perm[j], perm[j + p]);
  Eigen::MatrixXd out(2 * p, 2 * p);
  for (int i = 0; i < 2 * p; ++i)
    for (int j = 0; j < 2 * p; ++j) out(i, j) = m(perm[i], perm[j]);
  return out;
}

}  // namespace testutil
