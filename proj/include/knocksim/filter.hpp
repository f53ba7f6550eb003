#pragma once

#include <Eigen/Dense>
#include <vector>

#include "knocksim/lasso.hpp"

namespace knocksim {

enum class StatisticMode { debiased, lasso };

// Knockoff statistics Delta_j = |v_j| - |v_{j+p}| on an augmented fit, with v
// the debiased or raw lasso coefficients.
Eigen::VectorXd statistics_delta(const LassoFit& fit, StatisticMode mode);

// Data-driven threshold
//   T = min{ t in D : (#{Delta_j <= -t} + offset) / (#{Delta_j >= t} v 1) <= q }
// over D = {|Delta_j|} \ {0}; +infinity when no t qualifies. offset 0 is the
// plain knockoff numerator, offset 1 the knockoff+ one.
double knockoff_threshold(const Eigen::VectorXd& delta, double q, int offset);

// {j : Delta_j >= T}, 0-based.
std::vector<int> select(const Eigen::VectorXd& delta, double T);

struct TrialMetrics {
  double fdp = 0.0;
  double tpp = 0.0;
  int n_selected = 0;
  int n_false = 0;
  int n_true_nonnull = 0;
  bool tpp_defined = true;  // false when there are no true nonnulls
};

TrialMetrics trial_metrics(const std::vector<int>& selected,
                           const Eigen::VectorXd& theta_true);

// Threshold policy for the no-knockoff baseline (Lasso with oracle
// threshold).
struct OraclePolicy {
  enum class Kind { fixed, oracle_fdp, esd_rule };
  Kind kind = Kind::fixed;
  double value = 0.0;  // t for fixed, q for oracle_fdp, L for esd_rule

  static OraclePolicy fixed(double t) { return {Kind::fixed, t}; }
  static OraclePolicy oracle_fdp(double q) { return {Kind::oracle_fdp, q}; }
  static OraclePolicy esd_rule(double L) { return {Kind::esd_rule, L}; }
};

struct OracleSelection {
  std::vector<int> selected;
  TrialMetrics metrics;
  double threshold = 0.0;  // +infinity when nothing qualifies
};

// Thresholds the p debiased coefficients directly. fixed(t) and
// esd_rule(L) (t = L^(1/4)) select {j : |v_j| >= t}; oracle_fdp(q) uses the
// ground truth to pick the smallest threshold among {|v_j|} whose selection
// keeps FDP <= q.
OracleSelection oracle_threshold_select(const Eigen::VectorXd& debiased,
                                        const Eigen::VectorXd& theta_true,
                                        const OraclePolicy& policy);

}  // namespace knocksim
