#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "helpers.hpp"
#include "knocksim/errors.hpp"
#include "knocksim/knockoffs.hpp"

using namespace knocksim;

namespace {

Eigen::MatrixXd two_by_two(double rho) {
  Eigen::MatrixXd s(2, 2);
  s << 1, rho, rho, 1;
  return s;
}

// The p=3 correlation matrix frozen from a randomized search: PD, non-tree,
// and the sign-flipped precision is indefinite, so CI knockoffs do not exist.
Eigen::MatrixXd ci_counterexample() {
  Eigen::MatrixXd s(3, 3);
  s << 1, 0.7, 0.7, 0.7, 1, 0.1, 0.7, 0.1, 1;
  return s;
}

}  // namespace

TEST_CASE("equi_s rules") {
  CovMatrix id = build_cov(CovModel::explicit_matrix(Eigen::MatrixXd::Identity(4, 4)));
  Eigen::VectorXd s = equi_s(id, EquiRule::paper_default);
  CHECK(s.isConstant(1.0, 0.0));  // exactly one: no slack needed

  CovMatrix c = build_cov(CovModel::explicit_matrix(two_by_two(0.5)));
  Eigen::VectorXd spd = equi_s(c, EquiRule::paper_default);
  CHECK(spd[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(spd[1] == doctest::Approx(1.0).epsilon(1e-6));

  Eigen::VectorXd ssc = equi_s(c, EquiRule::scaled, 1.0);
  CHECK(ssc[0] == doctest::Approx(0.5).epsilon(1e-9));

  Eigen::MatrixXd nonunit(2, 2);
  nonunit << 2, 0.5, 0.5, 1;
  CHECK_THROWS_AS(
      equi_s(build_cov(CovModel::explicit_matrix(nonunit)), EquiRule::paper_default),
      numeric_error);
  CHECK_THROWS_AS(equi_s(c, EquiRule::scaled, 2.5), std::invalid_argument);
  CHECK_THROWS_AS(equi_s(c, EquiRule::scaled, 0.0), std::invalid_argument);
}

TEST_CASE("feasible_s shrinks only at the boundary") {
  CovMatrix id = build_cov(CovModel::explicit_matrix(Eigen::MatrixXd::Identity(3, 3)));
  Eigen::VectorXd s = Eigen::VectorXd::Ones(3);
  CHECK(feasible_s(id, s) == s);  // interior: untouched

  CovMatrix c = build_cov(CovModel::explicit_matrix(two_by_two(0.5)));
  Eigen::VectorXd boundary = Eigen::VectorXd::Ones(2);  // 2 Sigma - I singular
  Eigen::VectorXd shrunk = feasible_s(c, boundary);
  CHECK(shrunk[0] == doctest::Approx(1.0 - 1e-7).epsilon(1e-10));
}

TEST_CASE("ci_s closed forms") {
  Eigen::MatrixXd d = Eigen::Vector3d(2.0, 0.5, 1.0).asDiagonal();
  CovMatrix cd = build_cov(CovModel::explicit_matrix(d));
  Eigen::VectorXd sd = ci_s(cd);
  CHECK(sd[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sd[1] == doctest::Approx(0.5).epsilon(1e-12));

  CovMatrix c = build_cov(CovModel::explicit_matrix(two_by_two(0.5)));
  Eigen::VectorXd s = ci_s(c);
  CHECK(s[0] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("ci_s equals brute-force conditional variances on the p=3 tree") {
  CovMatrix c = build_cov(CovModel::binary_tree(3, 0.5));
  Eigen::VectorXd s = ci_s(c);
  // var(X_j | X_-j) = Sigma_jj - Sigma_{j,-j} Sigma_{-j,-j}^-1 Sigma_{-j,j}
  for (int j = 0; j < 3; ++j) {
    std::vector<int> rest;
    for (int i = 0; i < 3; ++i)
      if (i != j) rest.push_back(i);
    Eigen::MatrixXd s22(2, 2);
    Eigen::VectorXd s12(2);
    for (int a = 0; a < 2; ++a) {
      s12[a] = c.sigma(j, rest[a]);
      for (int b = 0; b < 2; ++b) s22(a, b) = c.sigma(rest[a], rest[b]);
    }
    double cond_var =
        c.sigma(j, j) - s12.dot(testutil::brute_force_inverse(s22) * s12);
    CHECK(std::abs(s[j] - cond_var) < 1e-10);
  }
}

TEST_CASE("ci_exists: trees yes, diagonally dominant yes, frozen p=3 no") {
  RngStream rng(555, {1});
  for (int rep = 0; rep < 10; ++rep) {
    int p = 3 + static_cast<int>(rng.below(30));
    CovMatrix c =
        build_cov(CovModel::explicit_matrix(testutil::random_tree_cov(p, rng)));
    CiExistence e = ci_exists(c);
    CHECK(e.exists);
    CHECK(e.tree_pattern);
  }
  for (int rep = 0; rep < 10; ++rep) {
    int p = 3 + static_cast<int>(rng.below(20));
    Eigen::MatrixXd prec = testutil::random_diag_dominant_precision(p, rng);
    CovMatrix c = build_cov(
        CovModel::explicit_matrix(testutil::brute_force_inverse(prec)));
    CiExistence e = ci_exists(c);
    CHECK(e.exists);
    CHECK(e.diag_dominant);
  }
  CovMatrix bad = build_cov(CovModel::explicit_matrix(ci_counterexample()));
  CiExistence e = ci_exists(bad);
  CHECK_FALSE(e.exists);
  CHECK(e.min_pivot < 0.0);
  CHECK_FALSE(e.tree_pattern);
  CHECK_FALSE(e.diag_dominant);
}

TEST_CASE("asdp_s") {
  CovMatrix id = build_cov(CovModel::explicit_matrix(Eigen::MatrixXd::Identity(3, 3)));
  AsdpResult r = asdp_s(id);
  CHECK(r.gamma == doctest::Approx(1.0));
  CHECK(r.s.isConstant(1.0, 1e-9));

  AsdpResult half = asdp_s(build_cov(CovModel::explicit_matrix(two_by_two(0.5))));
  CHECK(half.gamma == doctest::Approx(1.0));  // 2 lambda_min = 1 is feasible

  AsdpResult tight = asdp_s(build_cov(CovModel::explicit_matrix(two_by_two(0.9))));
  CHECK(tight.gamma == doctest::Approx(0.2).epsilon(1e-4));
  CHECK(tight.s[0] == doctest::Approx(0.2).epsilon(1e-4));

  // gamma* sits on the feasibility boundary: a 1e-5 bump is infeasible
  Eigen::MatrixXd m = 2.0 * two_by_two(0.9);
  m.diagonal().array() -= tight.gamma + 1e-5;
  CHECK_FALSE(cholesky_psd(m).psd);

  Eigen::MatrixXd nonunit(2, 2);
  nonunit << 2, 0.5, 0.5, 1;
  CHECK_THROWS_AS(asdp_s(build_cov(CovModel::explicit_matrix(nonunit))),
                  numeric_error);
}

TEST_CASE("extend_covariance block structure and degenerate cases") {
  CovMatrix c = build_cov(CovModel::binary_tree(3, 0.5));
  const int p = 3;

  KnockoffSpec zero = extend_covariance(c, Eigen::VectorXd::Zero(p), Mechanism::equi);
  CHECK((zero.sigma_ext.topRightCorner(p, p) - c.sigma).cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.cond_mean_map.isIdentity(1e-10));
  CHECK(zero.cond_cov_chol.isZero(1e-7));

  // s = 0 knockoffs are exact copies
  RngStream rng(9, {1});
  Eigen::MatrixXd x = sample_mvn(c, 20, rng);
  RngStream krng(9, {2});
  Eigen::MatrixXd xt = sample_knockoffs(zero, x, krng);
  CHECK((xt - x).cwiseAbs().maxCoeff() < 1e-12);

  // diagonal Sigma with s = diag(Sigma): independent copies
  Eigen::MatrixXd d = Eigen::Vector3d(1.5, 1.0, 0.5).asDiagonal();
  CovMatrix cd = build_cov(CovModel::explicit_matrix(d));
  KnockoffSpec indep = extend_covariance(cd, d.diagonal(), Mechanism::ci);
  CHECK(indep.cond_mean_map.isZero(1e-12));
  CHECK((indep.cond_cov_chol * indep.cond_cov_chol.transpose() - d)
            .cwiseAbs()
            .maxCoeff() < 1e-10);

  // infeasible s reports the violation
  CHECK_THROWS_AS(
      extend_covariance(c, Eigen::VectorXd::Constant(p, 3.0), Mechanism::equi),
      numeric_error);
  CHECK_THROWS_AS(
      extend_covariance(c, Eigen::VectorXd::Constant(p, -0.1), Mechanism::equi),
      numeric_error);
}

TEST_CASE("independent-copy knockoffs decorrelate from X") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(3, 3);
  CovMatrix cd = build_cov(CovModel::explicit_matrix(d));
  KnockoffSpec spec = extend_covariance(cd, Eigen::VectorXd::Ones(3), Mechanism::ci);
  RngStream xr(31, {1});
  const int n = 100000;
  Eigen::MatrixXd x = sample_mvn(cd, n, xr);
  RngStream kr(31, {2});
  Eigen::MatrixXd xt = sample_knockoffs(spec, x, kr);
  Eigen::MatrixXd cross = x.transpose() * xt / n;
  CHECK(cross.cwiseAbs().maxCoeff() < 5.0 / std::sqrt(double(n)));
}

TEST_CASE("CI knockoffs on the p=3 tree match sigma_ext empirically") {
  CovMatrix c = build_cov(CovModel::binary_tree(3, 0.5));
  KnockoffSpec spec = make_knockoff_spec(c, Mechanism::ci);
  const int n = 100000;
  RngStream xr(47, {1});
  Eigen::MatrixXd x = sample_mvn(c, n, xr);
  RngStream kr(47, {2});
  Eigen::MatrixXd xt = sample_knockoffs(spec, x, kr);
  Eigen::MatrixXd joint(n, 6);
  joint.leftCols(3) = x;
  joint.rightCols(3) = xt;
  Eigen::MatrixXd emp = joint.transpose() * joint / n;
  CHECK((emp - spec.sigma_ext).cwiseAbs().maxCoeff() <
        5.0 / std::sqrt(double(n)));
}

TEST_CASE("swap invariance of sigma_ext is exact for every mechanism") {
  RngStream rng(808, {3});
  for (int rep = 0; rep < 12; ++rep) {
    int p = 3 + static_cast<int>(rng.below(30));
    CovMatrix c = rep % 2 == 0
                      ? build_cov(CovModel::explicit_matrix(
                            testutil::random_tree_cov(p, rng)))
                      : build_cov(CovModel::markov_chain(
                            testutil::random_chain_rhos(p, rng)));
    for (Mechanism mech : {Mechanism::equi, Mechanism::asdp, Mechanism::ci}) {
      KnockoffSpec spec = make_knockoff_spec(c, mech);
      CHECK(cholesky_psd(spec.sigma_ext).psd);
      std::vector<int> subset;
      for (int j = 0; j < p; ++j)
        if (rng.uniform() < 0.5) subset.push_back(j);
      Eigen::MatrixXd permuted = testutil::swap_permuted(spec.sigma_ext, subset);
      CHECK(permuted == spec.sigma_ext);  // exact, not approximate
    }
  }
}

TEST_CASE("eigenvalue flip lemma on random forest-patterned matrices") {
  RngStream rng(321, {6});
  for (int rep = 0; rep < 50; ++rep) {
    int p = 2 + static_cast<int>(rng.below(31));  // p <= 32
    Eigen::MatrixXd m = testutil::random_forest_symmetric(p, rng);
    Eigen::MatrixXd flipped = -m;
    flipped.diagonal() += 2.0 * m.diagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(m, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(flipped, Eigen::EigenvaluesOnly);
    CHECK((ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("CI diagonal identity against brute-force extended inverse") {
  RngStream rng(14142, {8});
  for (int rep = 0; rep < 10; ++rep) {
    int p = 3 + static_cast<int>(rng.below(20));
    CovMatrix c =
        build_cov(CovModel::explicit_matrix(testutil::random_tree_cov(p, rng)));
    KnockoffSpec spec = make_knockoff_spec(c, Mechanism::ci);
    Eigen::MatrixXd pext = testutil::brute_force_inverse(spec.sigma_ext);
    Eigen::VectorXd want =
        c.precision.diagonal().array().square() * c.sigma.diagonal().array();
    CHECK((pext.diagonal().head(p) - want).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("extended_precision rejects singular sigma_ext") {
  CovMatrix c = build_cov(CovModel::binary_tree(3, 0.5));
  KnockoffSpec spec = extend_covariance(c, Eigen::VectorXd::Zero(3), Mechanism::equi);
  CHECK_THROWS_AS(extended_precision(spec), numeric_error);
}

TEST_CASE("sample_knockoffs dimension checks") {
  CovMatrix c = build_cov(CovModel::binary_tree(3, 0.5));
  KnockoffSpec spec = make_knockoff_spec(c, Mechanism::ci);
  RngStream rng(1, {});
  Eigen::MatrixXd wrong(4, 2);
  CHECK_THROWS_AS(sample_knockoffs(spec, wrong, rng), std::invalid_argument);
}
