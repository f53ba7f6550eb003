#include "knocksim/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "knocksim/errors.hpp"

namespace knocksim {

Eigen::VectorXd statistics_delta(const LassoFit& fit, StatisticMode mode) {
  const Eigen::VectorXd& v =
      mode == StatisticMode::debiased ? fit.debiased : fit.coef;
  if (mode == StatisticMode::debiased && fit.debiased.size() == 0)
    throw std::invalid_argument("statistics_delta: fit has no debiased coefficients");
  const int m = static_cast<int>(v.size());
  if (m % 2 != 0)
    throw std::invalid_argument("statistics_delta: fit dimension must be 2p");
  const int p = m / 2;
  Eigen::VectorXd delta(p);
  for (int j = 0; j < p; ++j)
    delta[j] = std::abs(v[j]) - std::abs(v[j + p]);
  return delta;
}

double knockoff_threshold(const Eigen::VectorXd& delta, double q, int offset) {
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("knockoff_threshold: q must be in (0, 1)");
  if (offset != 0 && offset != 1)
    throw std::invalid_argument("knockoff_threshold: offset must be 0 or 1");
  const int p = static_cast<int>(delta.size());

  std::vector<double> sorted(delta.data(), delta.data() + p);
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> candidates;  // D = {|delta_j|} \ {0}, ascending
  candidates.reserve(p);
  for (int j = 0; j < p; ++j)
    if (delta[j] != 0.0) candidates.push_back(std::abs(delta[j]));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  for (double t : candidates) {
    auto below = std::upper_bound(sorted.begin(), sorted.end(), -t);
    long n_neg = below - sorted.begin();  // #{delta_j <= -t}
    auto at_least = std::lower_bound(sorted.begin(), sorted.end(), t);
    long n_pos = sorted.end() - at_least;  // #{delta_j >= t}
    double ratio = static_cast<double>(n_neg + offset) /
                   static_cast<double>(std::max(n_pos, 1L));
    if (ratio <= q) return t;
  }
  return std::numeric_limits<double>::infinity();
}

std::vector<int> select(const Eigen::VectorXd& delta, double T) {
  std::vector<int> out;
  for (int j = 0; j < delta.size(); ++j)
    if (delta[j] >= T) out.push_back(j);
  return out;
}

TrialMetrics trial_metrics(const std::vector<int>& selected,
                           const Eigen::VectorXd& theta_true) {
  TrialMetrics m;
  m.n_selected = static_cast<int>(selected.size());
  for (int j : selected)
    if (theta_true[j] == 0.0) ++m.n_false;
  m.n_true_nonnull =
      static_cast<int>((theta_true.array().abs() > 0.0).count());
  m.fdp = static_cast<double>(m.n_false) / std::max(m.n_selected, 1);
  if (m.n_true_nonnull > 0) {
    m.tpp = static_cast<double>(m.n_selected - m.n_false) / m.n_true_nonnull;
  } else {
    m.tpp = std::numeric_limits<double>::quiet_NaN();
    m.tpp_defined = false;
  }
  return m;
}

OracleSelection oracle_threshold_select(const Eigen::VectorXd& debiased,
                                        const Eigen::VectorXd& theta_true,
                                        const OraclePolicy& policy) {
  if (debiased.size() != theta_true.size())
    throw std::invalid_argument("oracle_threshold_select: size mismatch");
  const int p = static_cast<int>(debiased.size());

  auto select_at = [&](double t) {
    std::vector<int> sel;
    for (int j = 0; j < p; ++j)
      if (std::abs(debiased[j]) >= t) sel.push_back(j);
    return sel;
  };

  OracleSelection out;
  switch (policy.kind) {
    case OraclePolicy::Kind::fixed:
    case OraclePolicy::Kind::esd_rule: {
      double t = policy.kind == OraclePolicy::Kind::fixed
                     ? policy.value
                     : std::pow(policy.value, 0.25);
      if (!(t > 0.0))
        throw std::invalid_argument("oracle_threshold_select: threshold must be > 0");
      out.threshold = t;
      out.selected = select_at(t);
      break;
    }
    case OraclePolicy::Kind::oracle_fdp: {
      double q = policy.value;
      if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("oracle_threshold_select: q must be in (0, 1)");
      std::vector<double> candidates(p);
      for (int j = 0; j < p; ++j) candidates[j] = std::abs(debiased[j]);
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()),
                       candidates.end());
      out.threshold = std::numeric_limits<double>::infinity();
      for (double t : candidates) {  // smallest qualifying threshold
        std::vector<int> sel = select_at(t);
        if (trial_metrics(sel, theta_true).fdp <= q) {
          out.threshold = t;
          out.selected = std::move(sel);
          break;
        }
      }
      break;
    }
  }
  out.metrics = trial_metrics(out.selected, theta_true);
  return out;
}

}  // namespace knocksim
