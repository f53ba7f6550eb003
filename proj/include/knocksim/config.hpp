#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "knocksim/covariance.hpp"
#include "knocksim/filter.hpp"
#include "knocksim/knockoffs.hpp"

namespace knocksim {

struct LambdaPolicy {
  enum class Kind { fixed, cv };
  Kind kind = Kind::cv;
  double value = 0.0;  // fixed lambda
  int folds = 5;       // cv folds

  static LambdaPolicy fixed(double v) { return {Kind::fixed, v, 0}; }
  static LambdaPolicy cv(int folds) { return {Kind::cv, 0.0, folds}; }
};

struct ExperimentConfig {
  CovModel model;
  // markov_chain only: when > 0 and rho_seq is empty, edge correlations are
  // drawn once per experiment as rho_j = G_j 1{|G_j| <= 1}, G_j ~ N(0, sd^2).
  double rho_sd = 0.0;

  int n = 0;
  int k = 0;
  double amplitude = 0.0;
  double sigma = 1.0;  // noise variance per sample is n * sigma^2
  LambdaPolicy lambda_policy;
  double q = 0.1;
  std::vector<Mechanism> mechanisms;
  StatisticMode statistic_mode = StatisticMode::debiased;
  int offset = 0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::optional<OraclePolicy> baseline;

  // Throws config_error naming the bad field.
  void validate() const;
};

// Strict JSON parsing: unknown keys are rejected (with a suggestion when a
// close or known-alias key exists); missing required fields and out-of-range
// values throw config_error. Defaults: lambda_policy = cv(5 folds),
// statistic_mode = debiased, offset = 0, mechanisms = [equi, asdp, ci].
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& json_text);

// Reads an explicit covariance: p rows of p comma-separated decimals,
// no header.
Eigen::MatrixXd read_matrix_csv(const std::string& path);

}  // namespace knocksim
