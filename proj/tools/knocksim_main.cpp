#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "knocksim/errors.hpp"
#include "knocksim/esd.hpp"
#include "knocksim/simulate.hpp"

namespace {

using namespace knocksim;

double median_of(const Eigen::VectorXd& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  size_t m = s.size();
  return m % 2 == 1 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]);
}

void append_esd_row(std::string& out, const EsdReport& r, int p) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                r.procedure.c_str(), p, r.scale, r.lp, r.values.minCoeff(),
                median_of(r.values), r.values.maxCoeff());
  out += buf;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 int workers) {
  ExperimentConfig cfg = parse_config(config_path);
  ExperimentResult result = run_experiment(cfg, workers);
  write_csv(result.records, out_path);
  std::cout << summaries_to_text(result.summaries);
  return 0;
}

int cmd_esd(const std::string& config_path, double scale,
            const std::string& out_path) {
  ExperimentConfig cfg = parse_config(config_path);
  CovMatrix cov = build_cov(resolve_model(cfg));
  const int p = cov.dim();

  std::string out = "procedure,p,scale,lp,min_value,median_value,max_value\n";
  append_esd_row(out, esd_lasso(cov, scale), p);
  append_esd_row(out, esd_equi(cov), p);
  for (Mechanism mech : cfg.mechanisms) {
    KnockoffSpec spec = make_knockoff_spec(cov, mech);
    append_esd_row(out, esd_knockoff_generic(spec, scale), p);
  }
  if (cov.has_precision() && forest_pattern(cov.precision, 1e-8))
    append_esd_row(out, esd_ci_tree(cov, scale), p);

  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open output file \"" + out_path + "\"");
  file << out;
  std::cout << out;
  return 0;
}

int cmd_check(const std::string& config_path, const std::string& mech_name,
              const std::string& s_out) {
  ExperimentConfig cfg = parse_config(config_path);
  CovMatrix cov = build_cov(resolve_model(cfg));
  Mechanism mech = mechanism_from_name(mech_name);

  Eigen::VectorXd s;
  switch (mech) {
    case Mechanism::equi: s = equi_s(cov, EquiRule::paper_default); break;
    case Mechanism::asdp: {
      AsdpResult r = asdp_s(cov);
      std::printf("asdp gamma: %.10g\n", r.gamma);
      s = r.s;
      break;
    }
    case Mechanism::ci: s = ci_s(cov); break;
  }

  Eigen::MatrixXd slack = 2.0 * cov.sigma;
  slack.diagonal() -= s;
  PsdCholesky feas = cholesky_psd(slack);
  std::printf("mechanism: %s\n", mech_name.c_str());
  std::printf("p: %d\n", cov.dim());
  std::printf("s: min %.10g  max %.10g  mean %.10g\n", s.minCoeff(),
              s.maxCoeff(), s.mean());
  std::printf("e7 feasible (diag(s) <= 2 Sigma): %s\n", feas.psd ? "yes" : "no");
  std::printf("2 Sigma - diag(s): min Cholesky pivot %.10g\n", feas.min_pivot);

  KnockoffSpec spec = extend_covariance(cov, s, mech);
  PsdCholesky ext = cholesky_psd(spec.sigma_ext);
  std::printf("sigma_ext PSD: %s, min Cholesky pivot %.10g\n",
              ext.psd ? "yes" : "no", ext.min_pivot);

  if (mech == Mechanism::ci) {
    CiExistence e = ci_exists(cov);
    std::printf("ci_exists: %s (flip min pivot %.10g, tree pattern %s, "
                "diagonally dominant %s)\n",
                e.exists ? "yes" : "no", e.min_pivot,
                e.tree_pattern ? "yes" : "no", e.diag_dominant ? "yes" : "no");
  }

  if (!s_out.empty()) {
    std::ofstream file(s_out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open output file \"" + s_out + "\"");
    char buf[40];
    for (int j = 0; j < s.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.10g\n", s[j]);
      file << buf;
    }
    std::printf("s vector written to %s\n", s_out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knockoff filter simulator for correlated Gaussian designs"};
  app.require_subcommand(1);

  std::string config_path, out_path, mech_name, s_out;
  int workers = 0;
  double scale = 1.0;

  CLI::App* sim = app.add_subcommand("simulate", "run a Monte Carlo experiment");
  sim->add_option("--config", config_path, "JSON experiment config")->required();
  sim->add_option("--out", out_path, "output CSV of per-trial records")->required();
  sim->add_option("--workers", workers, "worker threads (0 = hardware)");

  CLI::App* esd = app.add_subcommand("esd", "effective signal deficiency report");
  esd->add_option("--config", config_path, "JSON experiment config")->required();
  esd->add_option("--scale", scale, "common divisor before the LP distance")
      ->required();
  esd->add_option("--out", out_path, "output CSV")->required();

  CLI::App* check = app.add_subcommand("check", "inspect a knockoff mechanism");
  check->add_option("--mechanism", mech_name, "equi, asdp or ci")->required();
  check->add_option("--config", config_path, "JSON experiment config")->required();
  check->add_option("--s-out", s_out, "write the s vector, one value per line");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(config_path, out_path, workers);
    if (esd->parsed()) return cmd_esd(config_path, scale, out_path);
    if (check->parsed()) return cmd_check(config_path, mech_name, s_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const knocksim::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
