#include "knocksim/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "knocksim/errors.hpp"

namespace knocksim {

namespace {

using nlohmann::json;

int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Known aliases people reach for; checked before the edit-distance fallback.
std::string suggestion_for(const std::string& key,
                           const std::vector<std::string>& allowed) {
  static const std::vector<std::pair<std::string, std::string>> aliases = {
      {"fdr", "q"},       {"target_fdr", "q"},   {"alpha", "q"},
      {"lambda", "lambda_policy"}, {"num_trials", "trials"},
      {"reps", "trials"}, {"sparsity", "k"},     {"statistic", "statistic_mode"},
  };
  for (const auto& [from, to] : aliases)
    if (key == from &&
        std::find(allowed.begin(), allowed.end(), to) != allowed.end())
      return to;
  std::string best;
  int best_d = 3;
  for (const std::string& cand : allowed) {
    int d = edit_distance(key, cand);
    if (d < best_d) {
      best_d = d;
      best = cand;
    }
  }
  return best;
}

void check_keys(const json& obj, const std::string& where,
                const std::vector<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      std::ostringstream os;
      os << where << ": unknown key \"" << item.key() << "\"";
      std::string hint = suggestion_for(item.key(), allowed);
      if (!hint.empty()) os << " (did you mean \"" << hint << "\"?)";
      throw config_error(os.str());
    }
  }
}

const json& require(const json& obj, const std::string& where,
                    const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw config_error(where + ": missing required key \"" + key + "\"");
  return *it;
}

template <typename T>
T get_as(const json& v, const std::string& field) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw config_error("field \"" + field + "\" has the wrong type");
  }
}

CovModel parse_model(const json& m) {
  if (!m.is_object()) throw config_error("model: must be an object");
  check_keys(m, "model", {"kind", "p", "rho", "rho_seq", "rho_sd", "csv", "matrix"});
  std::string kind = get_as<std::string>(require(m, "model", "kind"), "model.kind");

  if (kind == "binary_tree") {
    check_keys(m, "model(binary_tree)", {"kind", "p", "rho"});
    return CovModel::binary_tree(
        get_as<int>(require(m, "model", "p"), "model.p"),
        get_as<double>(require(m, "model", "rho"), "model.rho"));
  }
  if (kind == "markov_chain") {
    check_keys(m, "model(markov_chain)", {"kind", "p", "rho_seq", "rho_sd"});
    int p = get_as<int>(require(m, "model", "p"), "model.p");
    CovModel model;
    model.kind = CovKind::markov_chain;
    model.p = p;
    if (m.contains("rho_seq"))
      model.rho_seq = get_as<std::vector<double>>(m["rho_seq"], "model.rho_seq");
    else if (!m.contains("rho_sd"))
      throw config_error("model: markov_chain needs rho_seq or rho_sd");
    return model;
  }
  if (kind == "explicit") {
    check_keys(m, "model(explicit)", {"kind", "csv", "matrix"});
    Eigen::MatrixXd mat;
    if (m.contains("csv")) {
      mat = read_matrix_csv(get_as<std::string>(m["csv"], "model.csv"));
    } else if (m.contains("matrix")) {
      auto rows = get_as<std::vector<std::vector<double>>>(m["matrix"],
                                                           "model.matrix");
      int p = static_cast<int>(rows.size());
      mat.resize(p, p);
      for (int i = 0; i < p; ++i) {
        if (static_cast<int>(rows[i].size()) != p)
          throw config_error("model.matrix: rows must all have length p");
        for (int j = 0; j < p; ++j) mat(i, j) = rows[i][j];
      }
    } else {
      throw config_error("model: explicit needs csv or matrix");
    }
    return CovModel::explicit_matrix(std::move(mat));
  }
  throw config_error("model.kind: expected binary_tree, markov_chain or explicit");
}

LambdaPolicy parse_lambda_policy(const json& lp) {
  if (!lp.is_object()) throw config_error("lambda_policy: must be an object");
  check_keys(lp, "lambda_policy", {"kind", "value", "folds"});
  std::string kind =
      get_as<std::string>(require(lp, "lambda_policy", "kind"), "lambda_policy.kind");
  if (kind == "fixed") {
    check_keys(lp, "lambda_policy(fixed)", {"kind", "value"});
    double v = get_as<double>(require(lp, "lambda_policy", "value"),
                              "lambda_policy.value");
    if (v < 0.0) throw config_error("lambda_policy.value: must be >= 0");
    return LambdaPolicy::fixed(v);
  }
  if (kind == "cv") {
    check_keys(lp, "lambda_policy(cv)", {"kind", "folds"});
    int folds = lp.contains("folds")
                    ? get_as<int>(lp["folds"], "lambda_policy.folds")
                    : 5;
    if (folds < 2) throw config_error("lambda_policy.folds: must be >= 2");
    return LambdaPolicy::cv(folds);
  }
  throw config_error("lambda_policy.kind: expected fixed or cv");
}

OraclePolicy parse_baseline(const json& b) {
  if (!b.is_object()) throw config_error("baseline: must be an object");
  check_keys(b, "baseline", {"policy", "t", "q", "l"});
  std::string policy =
      get_as<std::string>(require(b, "baseline", "policy"), "baseline.policy");
  if (policy == "fixed")
    return OraclePolicy::fixed(get_as<double>(require(b, "baseline", "t"),
                                              "baseline.t"));
  if (policy == "oracle_fdp")
    return OraclePolicy::oracle_fdp(get_as<double>(require(b, "baseline", "q"),
                                                   "baseline.q"));
  if (policy == "esd_rule")
    return OraclePolicy::esd_rule(get_as<double>(require(b, "baseline", "l"),
                                                 "baseline.l"));
  throw config_error("baseline.policy: expected fixed, oracle_fdp or esd_rule");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (model.kind == CovKind::markov_chain && model.rho_seq.empty()) {
    // correlations drawn later by resolve_model
    if (!(rho_sd > 0.0))
      throw config_error("model: markov_chain needs rho_seq or rho_sd");
    if (model.p < 2) throw config_error("model: p must be >= 2 for a chain");
  } else {
    model.validate();
  }
  if (n < 2) throw config_error("n: must be >= 2");
  if (k < 1 || k > model.p) throw config_error("k: must satisfy 1 <= k <= p");
  if (!(q > 0.0 && q < 1.0)) throw config_error("q: must be in (0, 1)");
  if (sigma < 0.0) throw config_error("sigma: must be >= 0");
  if (trials < 1) throw config_error("trials: must be >= 1");
  if (offset != 0 && offset != 1) throw config_error("offset: must be 0 or 1");
  if (mechanisms.empty()) throw config_error("mechanisms: must be nonempty");
  if (rho_sd < 0.0) throw config_error("model.rho_sd: must be >= 0");
}

ExperimentConfig parse_config_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    size_t line = 1;
    for (size_t i = 0; i < std::min(json_text.size(), e.byte); ++i)
      if (json_text[i] == '\n') ++line;
    std::ostringstream os;
    os << "config: JSON parse error near line " << line << ": " << e.what();
    throw config_error(os.str());
  }
  if (!root.is_object()) throw config_error("config: top level must be an object");

  check_keys(root, "config",
             {"model", "n", "k", "amplitude", "sigma", "lambda_policy", "q",
              "mechanisms", "statistic_mode", "offset", "trials", "seed",
              "baseline"});

  ExperimentConfig cfg;
  const json& model_json = require(root, "config", "model");
  cfg.model = parse_model(model_json);
  if (model_json.is_object() && model_json.contains("rho_sd"))
    cfg.rho_sd = get_as<double>(model_json["rho_sd"], "model.rho_sd");

  cfg.n = get_as<int>(require(root, "config", "n"), "n");
  cfg.k = get_as<int>(require(root, "config", "k"), "k");
  cfg.amplitude = get_as<double>(require(root, "config", "amplitude"), "amplitude");
  cfg.sigma = get_as<double>(require(root, "config", "sigma"), "sigma");
  cfg.q = get_as<double>(require(root, "config", "q"), "q");
  cfg.trials = get_as<int>(require(root, "config", "trials"), "trials");
  cfg.seed = get_as<std::uint64_t>(require(root, "config", "seed"), "seed");

  if (root.contains("lambda_policy"))
    cfg.lambda_policy = parse_lambda_policy(root["lambda_policy"]);
  if (root.contains("mechanisms")) {
    for (const auto& name :
         get_as<std::vector<std::string>>(root["mechanisms"], "mechanisms"))
      cfg.mechanisms.push_back(mechanism_from_name(name));
  } else {
    cfg.mechanisms = {Mechanism::equi, Mechanism::asdp, Mechanism::ci};
  }
  if (root.contains("statistic_mode")) {
    std::string mode = get_as<std::string>(root["statistic_mode"], "statistic_mode");
    if (mode == "debiased")
      cfg.statistic_mode = StatisticMode::debiased;
    else if (mode == "lasso")
      cfg.statistic_mode = StatisticMode::lasso;
    else
      throw config_error("statistic_mode: expected debiased or lasso");
  }
  if (root.contains("offset"))
    cfg.offset = get_as<int>(root["offset"], "offset");
  if (root.contains("baseline"))
    cfg.baseline = parse_baseline(root["baseline"]);

  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("matrix csv: cannot open \"" + path + "\"");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        std::ostringstream os;
        os << "matrix csv: line " << lineno << ": bad value \"" << cell << "\"";
        throw config_error(os.str());
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw config_error("matrix csv: empty file");
  const int p = static_cast<int>(rows.size());
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i) {
    if (static_cast<int>(rows[i].size()) != p) {
      std::ostringstream os;
      os << "matrix csv: line " << (i + 1) << " has " << rows[i].size()
         << " values, expected " << p;
      throw config_error(os.str());
    }
    for (int j = 0; j < p; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace knocksim
