#include "knocksim/knockoffs.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "knocksim/errors.hpp"

namespace knocksim {

namespace {

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd symmetrize(Eigen::MatrixXd m) {
  return ((m + m.transpose()) / 2.0).eval();
}

}  // namespace

std::string mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::equi: return "equi";
    case Mechanism::asdp: return "asdp";
    case Mechanism::ci: return "ci";
  }
  return "?";
}

Mechanism mechanism_from_name(const std::string& name) {
  if (name == "equi") return Mechanism::equi;
  if (name == "asdp") return Mechanism::asdp;
  if (name == "ci") return Mechanism::ci;
  throw config_error("unknown mechanism \"" + name +
                     "\" (expected equi, asdp or ci)");
}

Eigen::VectorXd feasible_s(const CovMatrix& c, Eigen::VectorXd s) {
  const Eigen::MatrixXd two_sigma = 2.0 * c.sigma;
  auto margin_of = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd m = two_sigma;
    m.diagonal() -= v;
    return min_eigenvalue(m);
  };
  const double need = 1e-10 * std::max(1.0, 2.0 * c.sigma.cwiseAbs().maxCoeff());
  if (margin_of(s) >= need) return s;
  // The equi and ASDP rules land exactly on the PSD boundary whenever
  // 2 lambda_min(Sigma) < 1, which would make the extended covariance
  // singular; pull s inside by the smallest relative slack that restores a
  // strict margin.
  for (double eta = 1e-7; eta <= 0.11; eta *= 10.0) {
    Eigen::VectorXd shrunk = s * (1.0 - eta);
    if (margin_of(shrunk) >= need) return shrunk;
  }
  throw numeric_error("feasible_s: could not restore a strict PSD margin");
}

Eigen::VectorXd equi_s(const CovMatrix& c, EquiRule rule, double a) {
  const int p = c.dim();
  double lmin = min_eigenvalue(c.sigma);
  Eigen::VectorXd s;
  if (rule == EquiRule::paper_default) {
    if (!c.unit_diagonal)
      throw numeric_error("equi_s: paper_default rule assumes diag(Sigma)=1");
    s = Eigen::VectorXd::Constant(p, std::min(2.0 * lmin, 1.0));
  } else {
    if (!(a > 0.0 && a <= 2.0))
      throw std::invalid_argument("equi_s: a must lie in (0, 2]");
    s = Eigen::VectorXd::Constant(p, a * lmin);
  }
  return feasible_s(c, std::move(s));
}

Eigen::VectorXd ci_s(const CovMatrix& c) {
  if (!c.has_precision())
    throw numeric_error("ci_s: Sigma is numerically singular");
  return c.precision.diagonal().cwiseInverse();
}

CiExistence ci_exists(const CovMatrix& c) {
  if (!c.has_precision())
    throw numeric_error("ci_exists: Sigma is numerically singular");
  const Eigen::MatrixXd& prec = c.precision;
  const int p = c.dim();

  // 2 diag(diag(P)) - P: the precision with off-diagonal signs flipped
  Eigen::MatrixXd flipped = -prec;
  flipped.diagonal() += 2.0 * prec.diagonal();

  PsdCholesky chol = cholesky_psd(symmetrize(flipped));

  CiExistence out;
  out.exists = chol.psd;
  out.min_pivot = chol.min_pivot;
  out.tree_pattern = forest_pattern(prec, 1e-8);
  out.diag_dominant = true;
  for (int j = 0; j < p && out.diag_dominant; ++j) {
    double off = prec.row(j).cwiseAbs().sum() - std::abs(prec(j, j));
    if (prec(j, j) < off - 1e-12 * std::max(1.0, std::abs(prec(j, j))))
      out.diag_dominant = false;
  }
  return out;
}

AsdpResult asdp_s(const CovMatrix& c) {
  if (!c.unit_diagonal)
    throw numeric_error("asdp_s: unit-diagonal Sigma required (standardize first)");
  const int p = c.dim();
  // Diagonal approximation Sigma_a = I: step 1 yields s_hat = 1.
  const Eigen::VectorXd s_hat = Eigen::VectorXd::Ones(p);

  auto feasible = [&](double gamma) {
    Eigen::MatrixXd m = 2.0 * c.sigma;
    m.diagonal() -= gamma * s_hat;
    return cholesky_psd(m).psd;
  };

  AsdpResult out;
  if (feasible(1.0)) {
    out.gamma = 1.0;
  } else {
    double lo = 0.0, hi = 1.0;  // gamma = 0 is always feasible
    while (hi - lo > 1e-6) {
      double mid = (lo + hi) / 2.0;
      (feasible(mid) ? lo : hi) = mid;
    }
    out.gamma = lo;
  }
  out.s = feasible_s(c, out.gamma * s_hat);
  return out;
}

KnockoffSpec extend_covariance(const CovMatrix& c, Eigen::VectorXd s,
                               Mechanism mechanism) {
  const int p = c.dim();
  if (static_cast<int>(s.size()) != p)
    throw std::invalid_argument("extend_covariance: s has wrong length");
  if ((s.array() < 0.0).any())
    throw numeric_error("extend_covariance: s must be nonnegative");

  Eigen::MatrixXd slack = 2.0 * c.sigma;
  slack.diagonal() -= s;
  PsdCholesky feas = cholesky_psd(slack);
  if (!feas.psd) {
    std::ostringstream os;
    os << "extend_covariance: diag(s) <= 2 Sigma fails (most negative pivot "
       << feas.min_pivot << ")";
    throw numeric_error(os.str());
  }
  if (!c.has_precision())
    throw numeric_error("extend_covariance: Sigma is numerically singular");

  KnockoffSpec spec;
  spec.mechanism = mechanism;
  spec.s = std::move(s);

  Eigen::MatrixXd cross = c.sigma;
  cross.diagonal() -= spec.s;  // Sigma - diag(s)
  spec.sigma_ext.resize(2 * p, 2 * p);
  spec.sigma_ext.topLeftCorner(p, p) = c.sigma;
  spec.sigma_ext.bottomRightCorner(p, p) = c.sigma;
  spec.sigma_ext.topRightCorner(p, p) = cross;
  spec.sigma_ext.bottomLeftCorner(p, p) = cross;

  spec.cond_mean_map = cross * c.precision;
  Eigen::MatrixXd cond_cov =
      symmetrize(c.sigma - spec.cond_mean_map * cross);
  // V can be a near-zero residual (s = 0), so clamp at Sigma's scale
  PsdCholesky vchol = cholesky_psd(cond_cov, c.sigma.cwiseAbs().maxCoeff());
  if (!vchol.psd) {
    std::ostringstream os;
    os << "extend_covariance: conditional covariance not PSD (pivot "
       << vchol.min_pivot << ")";
    throw numeric_error(os.str());
  }
  spec.cond_cov_chol = std::move(vchol.factor);
  return spec;
}

KnockoffSpec make_knockoff_spec(const CovMatrix& c, Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::equi:
      return extend_covariance(c, equi_s(c, EquiRule::paper_default), mechanism);
    case Mechanism::asdp:
      return extend_covariance(c, asdp_s(c).s, mechanism);
    case Mechanism::ci:
      return extend_covariance(c, ci_s(c), mechanism);
  }
  throw std::invalid_argument("make_knockoff_spec: bad mechanism");
}

Eigen::MatrixXd extended_precision(const KnockoffSpec& spec) {
  const int m = static_cast<int>(spec.sigma_ext.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(spec.sigma_ext);
  if (llt.info() != Eigen::Success)
    throw numeric_error("extended_precision: sigma_ext is not positive definite");
  Eigen::MatrixXd lower = llt.matrixL();
  double min_pivot_sq = lower.diagonal().minCoeff();
  min_pivot_sq *= min_pivot_sq;
  if (min_pivot_sq <= 1e-12 * std::max(1.0, spec.sigma_ext.cwiseAbs().maxCoeff()))
    throw numeric_error("extended_precision: sigma_ext is numerically singular");
  Eigen::MatrixXd linv = lower.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(m, m));
  return linv.transpose() * linv;
}

Eigen::MatrixXd sample_knockoffs(const KnockoffSpec& spec,
                                 const Eigen::MatrixXd& X, RngStream& rng) {
  const int p = spec.p();
  if (static_cast<int>(X.cols()) != p)
    throw std::invalid_argument("sample_knockoffs: X has wrong column count");
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd z(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) z(i, j) = rng.normal();
  return X * spec.cond_mean_map.transpose() +
         z * spec.cond_cov_chol.transpose();
}

}  // namespace knocksim
