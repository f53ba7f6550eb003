#include "knocksim/esd.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "knocksim/errors.hpp"

namespace knocksim {

double lp_distance_zero(const Eigen::VectorXd& values) {
  const int m = static_cast<int>(values.size());
  if (m < 1) throw std::invalid_argument("lp_distance_zero: empty input");
  if ((values.array() < 0.0).any())
    throw std::invalid_argument("lp_distance_zero: values must be nonnegative");

  std::vector<double> sorted(values.data(), values.data() + m);
  std::sort(sorted.begin(), sorted.end());

  // The feasibility map eps -> #{v >= eps}/m is a nonincreasing step function
  // that only changes at the sample values, so the infimum is attained at one
  // of the grid points k/m or at a sample value. A candidate c is (a limit
  // of) feasible points iff #{v > c} <= m*c.
  std::vector<double> candidates;
  candidates.reserve(2 * m + 1);
  for (int k = 0; k <= m; ++k)
    candidates.push_back(static_cast<double>(k) / m);
  candidates.insert(candidates.end(), sorted.begin(), sorted.end());
  std::sort(candidates.begin(), candidates.end());

  for (double c : candidates) {
    auto above = std::upper_bound(sorted.begin(), sorted.end(), c);
    long count = sorted.end() - above;  // #{v > c}
    if (static_cast<double>(count) <= m * c + 1e-9) return std::min(c, 1.0);
  }
  return 1.0;  // eps = 1 is always feasible
}

EsdReport esd_lasso(const CovMatrix& c, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("esd: scale must be > 0");
  if (!c.has_precision())
    throw numeric_error("esd_lasso: Sigma is numerically singular");
  EsdReport r;
  r.procedure = "lasso";
  r.values = c.precision.diagonal();
  r.scale = scale;
  r.lp = lp_distance_zero(r.values / scale);
  return r;
}

EsdReport esd_knockoff_generic(const KnockoffSpec& spec, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("esd: scale must be > 0");
  EsdReport r;
  r.procedure = "generic_" + mechanism_name(spec.mechanism);
  r.values = extended_precision(spec).diagonal();
  r.scale = scale;
  r.lp = lp_distance_zero(r.values / scale);
  return r;
}

EsdReport esd_equi(const CovMatrix& c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.sigma,
                                                    Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0))
    throw numeric_error("esd_equi: Sigma is singular (lambda_min <= 0)");
  EsdReport r;
  r.procedure = "equi";
  r.raw_scalar = 1.0 / lmin;  // lambda_max of the precision matrix
  r.values = Eigen::VectorXd::Constant(1, r.raw_scalar);
  r.scale = 1.0;
  r.lp = std::min(1.0, r.raw_scalar);
  return r;
}

EsdReport esd_ci_tree(const CovMatrix& c, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("esd: scale must be > 0");
  if (!c.has_precision())
    throw numeric_error("esd_ci_tree: Sigma is numerically singular");
  if (!forest_pattern(c.precision, 1e-8))
    throw numeric_error("esd_ci_tree: precision pattern is not a tree/forest");

  const int p = c.dim();
  EsdReport r;
  r.procedure = "ci_tree";
  r.values = c.precision.diagonal().array().square() *
             c.sigma.diagonal().array();

  // The closed form must match the actual extended precision diagonal.
  KnockoffSpec spec = extend_covariance(c, ci_s(c), Mechanism::ci);
  Eigen::VectorXd direct = extended_precision(spec).diagonal().head(p);
  double dev = (direct - r.values).cwiseAbs().maxCoeff();
  if (dev > 1e-8) {
    std::ostringstream os;
    os << "esd_ci_tree: closed form disagrees with sigma_ext^-1 (max dev "
       << dev << ")";
    throw numeric_error(os.str());
  }

  r.scale = scale;
  r.lp = lp_distance_zero(r.values / scale);
  return r;
}

}  // namespace knocksim
