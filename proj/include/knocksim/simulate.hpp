#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "knocksim/config.hpp"

namespace knocksim {

struct TrialRecord {
  int trial = 0;
  std::string mechanism;  // "equi" / "asdp" / "ci" / "baseline"
  double q = 0.0;
  double fdp = 0.0;
  double tpp = 0.0;
  bool tpp_defined = true;
  int n_selected = 0;
  double threshold = 0.0;
  double lambda_used = 0.0;
  std::uint64_t seed_stream = 0;
  std::uint64_t x_digest = 0;  // digest of the shared design; not serialized
};

struct MechanismSummary {
  std::string mechanism;
  double mean_fdp = 0.0, median_fdp = 0.0, q1_fdp = 0.0, q3_fdp = 0.0;
  double mean_tpp = 0.0, median_tpp = 0.0, q1_tpp = 0.0, q3_tpp = 0.0;
  int trials = 0;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;  // sorted by (trial, mechanism order)
  std::vector<MechanismSummary> summaries;
  std::vector<double> rho_seq_used;  // chain correlations actually used
};

// Precomputed per-experiment state: the covariance, one knockoff spec and
// extended precision per mechanism.
struct ExperimentSetup {
  CovMatrix cov;
  std::vector<Mechanism> mechanisms;
  std::vector<KnockoffSpec> specs;
  std::vector<Eigen::MatrixXd> precisions_ext;
  Eigen::MatrixXd precision;  // Sigma^-1, for the baseline debias
};

// Materializes the covariance model: markov_chain configs with rho_sd get
// their edge correlations drawn once from the experiment seed.
CovModel resolve_model(const ExperimentConfig& cfg);

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg);

// One trial: a shared (theta, X, Y) draw, then per-mechanism knockoffs,
// lasso fit, debias, statistics, threshold and metrics. Substreams are
// derived from (seed, trial, label), so results do not depend on scheduling.
std::vector<TrialRecord> run_trial(const ExperimentConfig& cfg,
                                   const ExperimentSetup& setup, int trial);

// Runs all trials (workers <= 0 picks the hardware concurrency) and
// aggregates per-mechanism summaries.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 0);

// CSV with header trial,mechanism,q,fdp,tpp,n_selected,T,lambda_used,
// seed_stream; 10 significant digits, +infinity as "inf", '\n' newlines.
std::string records_to_csv(const std::vector<TrialRecord>& records);
void write_csv(const std::vector<TrialRecord>& records, const std::string& path);

std::string summaries_to_text(const std::vector<MechanismSummary>& summaries);

}  // namespace knocksim
