#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "knocksim/config.hpp"
#include "knocksim/errors.hpp"
#include "knocksim/esd.hpp"
#include "knocksim/filter.hpp"
#include "knocksim/knockoffs.hpp"
#include "knocksim/lasso.hpp"
#include "knocksim/simulate.hpp"

namespace py = pybind11;
using namespace knocksim;

namespace {

CovModel model_from_kwargs(const std::string& kind, int p, double rho,
                           const std::vector<double>& rho_seq,
                           const Eigen::MatrixXd& matrix) {
  if (kind == "binary_tree") return CovModel::binary_tree(p, rho);
  if (kind == "markov_chain") return CovModel::markov_chain(rho_seq);
  if (kind == "explicit") return CovModel::explicit_matrix(matrix);
  throw config_error("unknown model kind \"" + kind + "\"");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "knockoff filter simulator: Gaussian knockoffs, debiased lasso, "
            "ESD diagnostics";

  py::register_exception<config_error>(m, "ConfigError");
  py::register_exception<numeric_error>(m, "NumericError");

  py::class_<RngStream>(m, "RngStream")
      .def(py::init([](std::uint64_t seed, const std::vector<std::uint64_t>& path) {
             RngStream* s = nullptr;
             // initializer_list cannot be built at runtime; mix manually
             std::uint64_t h = seed;
             switch (path.size()) {
               case 0: return new RngStream(h, {});
               case 1: return new RngStream(h, {path[0]});
               case 2: return new RngStream(h, {path[0], path[1]});
               case 3: return new RngStream(h, {path[0], path[1], path[2]});
               default: throw std::invalid_argument("path too long");
             }
             return s;
           }),
           py::arg("seed"), py::arg("path") = std::vector<std::uint64_t>{})
      .def("normal", &RngStream::normal)
      .def("uniform", &RngStream::uniform)
      .def_property_readonly("stream_id", &RngStream::stream_id);

  py::class_<CovMatrix>(m, "CovMatrix")
      .def_readonly("sigma", &CovMatrix::sigma)
      .def_readonly("chol", &CovMatrix::chol)
      .def_readonly("precision", &CovMatrix::precision)
      .def_readonly("unit_diagonal", &CovMatrix::unit_diagonal)
      .def_property_readonly("p", &CovMatrix::dim)
      .def("has_precision", &CovMatrix::has_precision);

  m.def(
      "build_cov",
      [](const std::string& kind, int p, double rho,
         const std::vector<double>& rho_seq, const Eigen::MatrixXd& matrix) {
        return build_cov(model_from_kwargs(kind, p, rho, rho_seq, matrix));
      },
      py::arg("kind"), py::arg("p") = 0, py::arg("rho") = 0.0,
      py::arg("rho_seq") = std::vector<double>{},
      py::arg("matrix") = Eigen::MatrixXd());

  m.def("cholesky_psd", [](const Eigen::MatrixXd& mat) {
    PsdCholesky c = cholesky_psd(mat);
    return py::make_tuple(c.psd, c.factor, c.min_pivot);
  });
  m.def("invert_spd", &invert_spd);
  m.def("sample_mvn", &sample_mvn, py::arg("cov"), py::arg("n"), py::arg("rng"));
  m.def("chow_liu_tree", &chow_liu_tree);
  m.def("standardize", [](const CovMatrix& c) {
    StandardizedCov s = standardize(c);
    return py::make_tuple(s.cov, s.scale);
  });
  m.def("forest_pattern", &forest_pattern, py::arg("m"), py::arg("tol") = 1e-8);

  py::class_<KnockoffSpec>(m, "KnockoffSpec")
      .def_property_readonly("mechanism",
                             [](const KnockoffSpec& s) {
                               return mechanism_name(s.mechanism);
                             })
      .def_readonly("s", &KnockoffSpec::s)
      .def_readonly("sigma_ext", &KnockoffSpec::sigma_ext)
      .def_readonly("cond_mean_map", &KnockoffSpec::cond_mean_map)
      .def_readonly("cond_cov_chol", &KnockoffSpec::cond_cov_chol)
      .def_property_readonly("p", &KnockoffSpec::p);

  m.def(
      "equi_s",
      [](const CovMatrix& c, const std::string& rule, double a) {
        return equi_s(c, rule == "scaled" ? EquiRule::scaled
                                          : EquiRule::paper_default, a);
      },
      py::arg("cov"), py::arg("rule") = "paper_default", py::arg("a") = 1.0);
  m.def("ci_s", &ci_s);
  m.def("ci_exists", [](const CovMatrix& c) {
    CiExistence e = ci_exists(c);
    py::dict d;
    d["exists"] = e.exists;
    d["min_pivot"] = e.min_pivot;
    d["tree_pattern"] = e.tree_pattern;
    d["diag_dominant"] = e.diag_dominant;
    return d;
  });
  m.def("asdp_s", [](const CovMatrix& c) {
    AsdpResult r = asdp_s(c);
    return py::make_tuple(r.s, r.gamma);
  });
  m.def(
      "extend_covariance",
      [](const CovMatrix& c, const Eigen::VectorXd& s, const std::string& mech) {
        return extend_covariance(c, s, mechanism_from_name(mech));
      },
      py::arg("cov"), py::arg("s"), py::arg("mechanism"));
  m.def(
      "make_knockoff_spec",
      [](const CovMatrix& c, const std::string& mech) {
        return make_knockoff_spec(c, mechanism_from_name(mech));
      },
      py::arg("cov"), py::arg("mechanism"));
  m.def("extended_precision", &extended_precision);
  m.def("sample_knockoffs", &sample_knockoffs, py::arg("spec"), py::arg("X"),
        py::arg("rng"));

  py::class_<LassoFit>(m, "LassoFit")
      .def_readonly("coef", &LassoFit::coef)
      .def_readonly("debiased", &LassoFit::debiased)
      .def_readonly("lambda_", &LassoFit::lambda)
      .def_readonly("support_size", &LassoFit::support_size)
      .def_readonly("d_factor", &LassoFit::d_factor)
      .def_readonly("objective", &LassoFit::objective)
      .def_readonly("kkt_residual", &LassoFit::kkt_residual)
      .def_readonly("converged", &LassoFit::converged)
      .def_readonly("sweeps", &LassoFit::sweeps);

  m.def(
      "fit_lasso_cd",
      [](const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double lam,
         double tol, int max_sweeps) {
        LassoOptions opts;
        opts.tol = tol;
        opts.max_sweeps = max_sweeps;
        return fit_lasso_cd(A, y, lam, opts);
      },
      py::arg("A"), py::arg("y"), py::arg("lambda_"), py::arg("tol") = 1e-8,
      py::arg("max_sweeps") = 100000);
  m.def("debias", &debias, py::arg("fit"), py::arg("A"), py::arg("y"),
        py::arg("precision"));
  m.def("default_lambda_grid", &default_lambda_grid, py::arg("A"), py::arg("y"),
        py::arg("count") = 50, py::arg("ratio") = 0.01);
  m.def(
      "cv_lambda",
      [](const Eigen::MatrixXd& A, const Eigen::VectorXd& y, int folds,
         const std::vector<double>& grid, RngStream& rng) {
        return cv_lambda(A, y, folds, grid, rng);
      },
      py::arg("A"), py::arg("y"), py::arg("folds"), py::arg("grid"),
      py::arg("rng"));

  m.def(
      "statistics_delta",
      [](const LassoFit& fit, const std::string& mode) {
        return statistics_delta(fit, mode == "lasso" ? StatisticMode::lasso
                                                     : StatisticMode::debiased);
      },
      py::arg("fit"), py::arg("mode") = "debiased");
  m.def("knockoff_threshold", &knockoff_threshold, py::arg("delta"),
        py::arg("q"), py::arg("offset") = 0);
  m.def(
      "select",
      [](const Eigen::VectorXd& delta, double T) {
        return knocksim::select(delta, T);
      },
      py::arg("delta"), py::arg("T"));
  m.def("trial_metrics", [](const std::vector<int>& sel,
                            const Eigen::VectorXd& theta) {
    TrialMetrics t = trial_metrics(sel, theta);
    py::dict d;
    d["fdp"] = t.fdp;
    d["tpp"] = t.tpp;
    d["tpp_defined"] = t.tpp_defined;
    d["n_selected"] = t.n_selected;
    d["n_false"] = t.n_false;
    d["n_true_nonnull"] = t.n_true_nonnull;
    return d;
  });
  m.def(
      "oracle_threshold_select",
      [](const Eigen::VectorXd& debiased, const Eigen::VectorXd& theta,
         const std::string& policy, double value) {
        OraclePolicy pol;
        if (policy == "fixed")
          pol = OraclePolicy::fixed(value);
        else if (policy == "oracle_fdp")
          pol = OraclePolicy::oracle_fdp(value);
        else if (policy == "esd_rule")
          pol = OraclePolicy::esd_rule(value);
        else
          throw std::invalid_argument("unknown oracle policy");
        OracleSelection sel = oracle_threshold_select(debiased, theta, pol);
        py::dict d;
        d["selected"] = sel.selected;
        d["threshold"] = sel.threshold;
        d["fdp"] = sel.metrics.fdp;
        d["tpp"] = sel.metrics.tpp;
        return d;
      },
      py::arg("debiased"), py::arg("theta_true"), py::arg("policy"),
      py::arg("value"));

  py::class_<EsdReport>(m, "EsdReport")
      .def_readonly("procedure", &EsdReport::procedure)
      .def_readonly("values", &EsdReport::values)
      .def_readonly("scale", &EsdReport::scale)
      .def_readonly("lp", &EsdReport::lp)
      .def_readonly("raw_scalar", &EsdReport::raw_scalar);

  m.def("lp_distance_zero", &lp_distance_zero);
  m.def("esd_lasso", &esd_lasso, py::arg("cov"), py::arg("scale"));
  m.def("esd_knockoff_generic", &esd_knockoff_generic, py::arg("spec"),
        py::arg("scale"));
  m.def("esd_equi", &esd_equi);
  m.def("esd_ci_tree", &esd_ci_tree, py::arg("cov"), py::arg("scale"));

  m.def(
      "run_experiment",
      [](const std::string& config_json, int workers) {
        ExperimentConfig cfg = parse_config_text(config_json);
        ExperimentResult res = run_experiment(cfg, workers);
        py::dict d;
        d["csv"] = records_to_csv(res.records);
        py::list summaries;
        for (const MechanismSummary& s : res.summaries) {
          py::dict row;
          row["mechanism"] = s.mechanism;
          row["trials"] = s.trials;
          row["mean_fdp"] = s.mean_fdp;
          row["median_fdp"] = s.median_fdp;
          row["mean_tpp"] = s.mean_tpp;
          row["median_tpp"] = s.median_tpp;
          summaries.append(row);
        }
        d["summaries"] = summaries;
        d["rho_seq_used"] = res.rho_seq_used;
        return d;
      },
      py::arg("config_json"), py::arg("workers") = 0);
}
