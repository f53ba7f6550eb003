#include "knocksim/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "knocksim/errors.hpp"
#include "knocksim/esd.hpp"

namespace knocksim {

namespace {

// FNV-1a over the row-major bytes of X; used to assert that the mechanisms
// of a trial really share the same design.
std::uint64_t matrix_digest(const Eigen::MatrixXd& m) {
  std::uint64_t h = 1469598103934665603ULL;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

std::vector<int> draw_support(int p, int k, RngStream& rng) {
  std::vector<int> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.below(p - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double quantile(std::vector<double> v, double prob) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  double pos = prob * (v.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

void format_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  out += buf;
}

}  // namespace

CovModel resolve_model(const ExperimentConfig& cfg) {
  CovModel model = cfg.model;
  if (model.kind == CovKind::markov_chain && model.rho_seq.empty()) {
    if (!(cfg.rho_sd > 0.0))
      throw config_error("model: markov_chain needs rho_seq or rho_sd");
    RngStream rho_rng(cfg.seed, {kStreamRhoSeq});
    model.rho_seq.resize(model.p - 1);
    for (double& r : model.rho_seq) {
      double g = cfg.rho_sd * rho_rng.normal();
      r = std::abs(g) <= 1.0 ? g : 0.0;  // clipped to zero outside [-1, 1]
      if (std::abs(r) > 1.0 - 1e-8)      // keep Sigma invertible
        r = std::copysign(1.0 - 1e-8, r);
    }
  }
  model.validate();
  return model;
}

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
  ExperimentSetup setup;
  setup.cov = build_cov(resolve_model(cfg));
  setup.precision = invert_spd(setup.cov);
  setup.mechanisms = cfg.mechanisms;
  for (Mechanism mech : cfg.mechanisms) {
    setup.specs.push_back(make_knockoff_spec(setup.cov, mech));
    setup.precisions_ext.push_back(extended_precision(setup.specs.back()));
  }
  return setup;
}

std::vector<TrialRecord> run_trial(const ExperimentConfig& cfg,
                                   const ExperimentSetup& setup, int trial) {
  const int p = setup.cov.dim();
  const int n = cfg.n;
  const auto t = static_cast<std::uint64_t>(trial);

  RngStream support_rng(cfg.seed, {t, kStreamSupport});
  std::vector<int> support = draw_support(p, cfg.k, support_rng);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  for (int j : support) theta[j] = cfg.amplitude;

  RngStream design_rng(cfg.seed, {t, kStreamDesign});
  Eigen::MatrixXd X = sample_mvn(setup.cov, n, design_rng);

  RngStream noise_rng(cfg.seed, {t, kStreamNoise});
  Eigen::VectorXd y = X * theta;
  const double noise_sd = cfg.sigma * std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) y[i] += noise_sd * noise_rng.normal();

  const std::uint64_t digest = matrix_digest(X);

  std::vector<TrialRecord> records;
  for (size_t mi = 0; mi < setup.mechanisms.size(); ++mi) {
    const Mechanism mech = setup.mechanisms[mi];
    const auto mech_word = static_cast<std::uint64_t>(mech);

    RngStream knockoff_rng(cfg.seed, {t, kStreamKnockoff, mech_word});
    Eigen::MatrixXd xt = sample_knockoffs(setup.specs[mi], X, knockoff_rng);
    Eigen::MatrixXd A(n, 2 * p);
    A.leftCols(p) = X;
    A.rightCols(p) = xt;

    double lambda = cfg.lambda_policy.value;
    if (cfg.lambda_policy.kind == LambdaPolicy::Kind::cv) {
      RngStream fold_rng(cfg.seed, {t, kStreamCvFolds, mech_word});
      lambda = cv_lambda(A, y, cfg.lambda_policy.folds,
                         default_lambda_grid(A, y), fold_rng);
    }
    LassoFit fit = fit_lasso_cd(A, y, lambda);
    if (cfg.statistic_mode == StatisticMode::debiased)
      fit.debiased = debias(fit, A, y, setup.precisions_ext[mi]);

    Eigen::VectorXd delta = statistics_delta(fit, cfg.statistic_mode);
    double threshold = knockoff_threshold(delta, cfg.q, cfg.offset);
    TrialMetrics metrics = trial_metrics(select(delta, threshold), theta);

    TrialRecord rec;
    rec.trial = trial;
    rec.mechanism = mechanism_name(mech);
    rec.q = cfg.q;
    rec.fdp = metrics.fdp;
    rec.tpp = metrics.tpp;
    rec.tpp_defined = metrics.tpp_defined;
    rec.n_selected = metrics.n_selected;
    rec.threshold = threshold;
    rec.lambda_used = lambda;
    rec.seed_stream = knockoff_rng.stream_id();
    rec.x_digest = digest;
    records.push_back(std::move(rec));
  }

  if (cfg.baseline) {
    double lambda = cfg.lambda_policy.value;
    if (cfg.lambda_policy.kind == LambdaPolicy::Kind::cv) {
      RngStream fold_rng(cfg.seed, {t, kStreamCvFolds, 0xba5eULL});
      lambda = cv_lambda(X, y, cfg.lambda_policy.folds,
                         default_lambda_grid(X, y), fold_rng);
    }
    LassoFit fit = fit_lasso_cd(X, y, lambda);
    Eigen::VectorXd debiased = debias(fit, X, y, setup.precision);
    OracleSelection sel = oracle_threshold_select(debiased, theta, *cfg.baseline);

    TrialRecord rec;
    rec.trial = trial;
    rec.mechanism = "baseline";
    rec.q = cfg.q;
    rec.fdp = sel.metrics.fdp;
    rec.tpp = sel.metrics.tpp;
    rec.tpp_defined = sel.metrics.tpp_defined;
    rec.n_selected = sel.metrics.n_selected;
    rec.threshold = sel.threshold;
    rec.lambda_used = lambda;
    rec.seed_stream = design_rng.stream_id();
    rec.x_digest = digest;
    records.push_back(std::move(rec));
  }
  return records;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int workers) {
  config.validate();
  ExperimentConfig cfg = config;
  cfg.model = resolve_model(config);
  ExperimentSetup setup = prepare_experiment(cfg);

  ExperimentResult result;
  if (cfg.model.kind == CovKind::markov_chain)
    result.rho_seq_used = cfg.model.rho_seq;

  const size_t rows_per_trial =
      setup.mechanisms.size() + (cfg.baseline ? 1 : 0);
  result.records.resize(static_cast<size_t>(cfg.trials) * rows_per_trial);

  int n_workers = workers > 0
                      ? workers
                      : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<int>(n_workers, cfg.trials);

  std::atomic<int> next_trial{0};
  std::mutex error_mutex;
  std::string first_error;

  auto worker = [&]() {
    for (;;) {
      int trial = next_trial.fetch_add(1);
      if (trial >= cfg.trials) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error.empty()) return;
      }
      try {
        std::vector<TrialRecord> rows = run_trial(cfg, setup, trial);
        std::copy(rows.begin(), rows.end(),
                  result.records.begin() + trial * rows_per_trial);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) {
          std::ostringstream os;
          os << "trial " << trial << " failed: " << e.what();
          first_error = os.str();
        }
        return;
      }
    }
  };

  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (!first_error.empty()) throw numeric_error(first_error);

  // Records are already sorted: slot order is (trial, mechanism order).
  std::vector<std::string> order;
  for (Mechanism m : setup.mechanisms) order.push_back(mechanism_name(m));
  if (cfg.baseline) order.push_back("baseline");
  for (const std::string& name : order) {
    MechanismSummary s;
    s.mechanism = name;
    std::vector<double> fdps, tpps;
    for (const TrialRecord& r : result.records) {
      if (r.mechanism != name) continue;
      fdps.push_back(r.fdp);
      if (r.tpp_defined) tpps.push_back(r.tpp);
      ++s.trials;
    }
    s.mean_fdp = fdps.empty() ? 0.0
                              : std::accumulate(fdps.begin(), fdps.end(), 0.0) /
                                    fdps.size();
    s.median_fdp = quantile(fdps, 0.5);
    s.q1_fdp = quantile(fdps, 0.25);
    s.q3_fdp = quantile(fdps, 0.75);
    s.mean_tpp = tpps.empty() ? std::numeric_limits<double>::quiet_NaN()
                              : std::accumulate(tpps.begin(), tpps.end(), 0.0) /
                                    tpps.size();
    s.median_tpp = quantile(tpps, 0.5);
    s.q1_tpp = quantile(tpps, 0.25);
    s.q3_tpp = quantile(tpps, 0.75);
    result.summaries.push_back(std::move(s));
  }
  return result;
}

std::string records_to_csv(const std::vector<TrialRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("records_to_csv: no records");
  std::string out =
      "trial,mechanism,q,fdp,tpp,n_selected,T,lambda_used,seed_stream\n";
  for (const TrialRecord& r : records) {
    out += std::to_string(r.trial);
    out += ',';
    out += r.mechanism;
    out += ',';
    format_double(out, r.q);
    out += ',';
    format_double(out, r.fdp);
    out += ',';
    format_double(out, r.tpp_defined ? r.tpp
                                     : std::numeric_limits<double>::quiet_NaN());
    out += ',';
    out += std::to_string(r.n_selected);
    out += ',';
    format_double(out, r.threshold);
    out += ',';
    format_double(out, r.lambda_used);
    out += ',';
    out += std::to_string(r.seed_stream);
    out += '\n';
  }
  return out;
}

void write_csv(const std::vector<TrialRecord>& records,
               const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file \"" + path + "\"");
  out << records_to_csv(records);
  if (!out) throw std::runtime_error("write failed for \"" + path + "\"");
}

std::string summaries_to_text(const std::vector<MechanismSummary>& summaries) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %7s %9s %9s %9s %9s %9s\n",
                "mechanism", "trials", "mean_fdp", "med_fdp", "mean_tpp",
                "med_tpp", "iqr_tpp");
  os << line;
  for (const MechanismSummary& s : summaries) {
    std::snprintf(line, sizeof(line),
                  "%-10s %7d %9.4f %9.4f %9.4f %9.4f %4.2f-%4.2f\n",
                  s.mechanism.c_str(), s.trials, s.mean_fdp, s.median_fdp,
                  s.mean_tpp, s.median_tpp, s.q1_tpp, s.q3_tpp);
    os << line;
  }
  return os.str();
}

}  // namespace knocksim
