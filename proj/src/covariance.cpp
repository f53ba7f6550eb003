#include "knocksim/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "knocksim/errors.hpp"

namespace knocksim {

namespace {

// Row-major storage so the inner dot products of the factorization run over
// contiguous memory.
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Path distance between nodes a and b (1-based) in the heap-ordered tree.
int tree_distance(int a, int b) {
  auto depth = [](int x) {
    int d = 0;
    while (x > 1) {
      x /= 2;
      ++d;
    }
    return d;
  };
  int da = depth(a), db = depth(b), dist = 0;
  while (da > db) {
    a /= 2;
    --da;
    ++dist;
  }
  while (db > da) {
    b /= 2;
    --db;
    ++dist;
  }
  while (a != b) {
    a /= 2;
    b /= 2;
    dist += 2;
  }
  return dist;
}

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void check_symmetric(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("matrix is not square");
  double dev = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (dev > tol) {
    std::ostringstream os;
    os << "matrix is not symmetric (max deviation " << dev << ")";
    throw std::invalid_argument(os.str());
  }
}

struct Dsu {
  std::vector<int> parent;
  explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

CovModel CovModel::binary_tree(int p, double rho) {
  CovModel m;
  m.kind = CovKind::binary_tree;
  m.p = p;
  m.rho = rho;
  return m;
}

CovModel CovModel::markov_chain(std::vector<double> rho_seq) {
  CovModel m;
  m.kind = CovKind::markov_chain;
  m.p = static_cast<int>(rho_seq.size()) + 1;
  m.rho_seq = std::move(rho_seq);
  return m;
}

CovModel CovModel::explicit_matrix(Eigen::MatrixXd mat) {
  CovModel m;
  m.kind = CovKind::explicit_matrix;
  m.p = static_cast<int>(mat.rows());
  m.matrix = std::move(mat);
  return m;
}

void CovModel::validate() const {
  if (p < 1) throw config_error("model: p must be >= 1");
  switch (kind) {
    case CovKind::binary_tree:
      if (!(std::abs(rho) < 1.0))
        throw config_error("model: binary_tree requires |rho| < 1");
      break;
    case CovKind::markov_chain:
      if (static_cast<int>(rho_seq.size()) != p - 1)
        throw config_error("model: markov_chain needs p-1 correlations");
      for (double r : rho_seq)
        if (!(std::abs(r) < 1.0 - 1e-8))
          throw config_error(
              "model: markov_chain correlation too close to +-1 "
              "(|rho_j| must stay below 1 - 1e-8)");
      break;
    case CovKind::explicit_matrix:
      if (matrix.rows() != p || matrix.cols() != p)
        throw config_error("model: explicit matrix must be p x p");
      try {
        check_symmetric(matrix, 1e-10 * std::max(1.0, max_abs(matrix)));
      } catch (const std::invalid_argument& e) {
        throw config_error(std::string("model: ") + e.what());
      }
      break;
  }
}

PsdCholesky cholesky_psd(const Eigen::MatrixXd& m, double scale_hint) {
  const double scale = std::max(max_abs(m), scale_hint);
  check_symmetric(m, 1e-10 * std::max(1.0, scale));

  const int p = static_cast<int>(m.rows());
  const double tol = 1e-10 * scale;
  // A clamped pivot forces its column to vanish; for a genuinely PSD input
  // the residual there is bounded by sqrt(pivot_i * pivot_k) <= sqrt(tol * scale).
  const double col_tol = std::sqrt(std::max(tol, 0.0) * scale) + tol;

  PsdCholesky out;
  RowMajorMatrix lower = RowMajorMatrix::Zero(p, p);
  double min_pivot = std::numeric_limits<double>::infinity();

  for (int k = 0; k < p; ++k) {
    double d = m(k, k) - lower.row(k).head(k).squaredNorm();
    min_pivot = std::min(min_pivot, d);
    if (d < -tol) {
      out.psd = false;
      out.min_pivot = min_pivot;
      return out;
    }
    if (d <= 0.0) {
      lower(k, k) = 0.0;
      for (int i = k + 1; i < p; ++i) {
        double r = m(i, k) - lower.row(i).head(k).dot(lower.row(k).head(k));
        if (std::abs(r) > col_tol) {
          out.psd = false;
          out.min_pivot = min_pivot;
          return out;
        }
        lower(i, k) = 0.0;
      }
    } else {
      double root = std::sqrt(d);
      lower(k, k) = root;
      for (int i = k + 1; i < p; ++i) {
        lower(i, k) =
            (m(i, k) - lower.row(i).head(k).dot(lower.row(k).head(k))) / root;
      }
    }
  }
  out.psd = true;
  out.factor = lower;
  out.min_pivot = (p == 0) ? 0.0 : min_pivot;
  return out;
}

CovMatrix wrap_cov(Eigen::MatrixXd sigma) {
  CovMatrix c;
  c.sigma = std::move(sigma);
  const int p = c.dim();
  PsdCholesky chol = cholesky_psd(c.sigma);
  if (!chol.psd) {
    std::ostringstream os;
    os << "covariance is not positive semidefinite (min pivot "
       << chol.min_pivot << ")";
    throw numeric_error(os.str());
  }
  c.chol = std::move(chol.factor);
  c.unit_diagonal =
      (c.sigma.diagonal().array() - 1.0).abs().maxCoeff() < 1e-10;
  if (chol.min_pivot > 1e-12 * std::max(1.0, max_abs(c.sigma))) {
    // strictly positive definite: Sigma^-1 = L^-T L^-1
    Eigen::MatrixXd linv = c.chol.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd::Identity(p, p));
    c.precision = linv.transpose() * linv;
  }
  return c;
}

CovMatrix build_cov(const CovModel& model) {
  model.validate();
  const int p = model.p;
  Eigen::MatrixXd sigma;
  switch (model.kind) {
    case CovKind::binary_tree: {
      sigma.resize(p, p);
      for (int i = 0; i < p; ++i) {
        sigma(i, i) = 1.0;
        for (int j = i + 1; j < p; ++j) {
          double v = std::pow(model.rho, tree_distance(i + 1, j + 1));
          sigma(i, j) = v;
          sigma(j, i) = v;
        }
      }
      break;
    }
    case CovKind::markov_chain: {
      sigma.resize(p, p);
      for (int i = 0; i < p; ++i) {
        sigma(i, i) = 1.0;
        double prod = 1.0;
        for (int j = i + 1; j < p; ++j) {
          prod *= model.rho_seq[j - 1];
          sigma(i, j) = prod;
          sigma(j, i) = prod;
        }
      }
      break;
    }
    case CovKind::explicit_matrix:
      sigma = model.matrix;
      break;
  }
  return wrap_cov(std::move(sigma));
}

Eigen::MatrixXd invert_spd(const CovMatrix& c) {
  if (!c.has_precision())
    throw numeric_error("covariance is numerically singular");
  return c.precision;
}

Eigen::MatrixXd sample_mvn(const CovMatrix& c, int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_mvn: n must be >= 1");
  const int p = c.dim();
  Eigen::MatrixXd z(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) z(i, j) = rng.normal();
  return z * c.chol.transpose();
}

std::vector<std::pair<int, int>> chow_liu_tree(
    const Eigen::MatrixXd& sample_cov) {
  const int p = static_cast<int>(sample_cov.rows());
  if (p < 2) throw std::invalid_argument("chow_liu_tree: p must be >= 2");
  check_symmetric(sample_cov, 1e-8 * std::max(1.0, max_abs(sample_cov)));

  struct Edge {
    double weight;
    int i, j;
  };
  std::vector<Edge> edges;
  edges.reserve(p * (p - 1) / 2);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      double denom = sample_cov(i, i) * sample_cov(j, j);
      if (denom <= 0.0)
        throw numeric_error("chow_liu_tree: nonpositive diagonal");
      double r = sample_cov(i, j) / std::sqrt(denom);
      if (std::abs(r) >= 1.0)
        throw numeric_error("chow_liu_tree: degenerate correlation |r| >= 1");
      edges.push_back({-std::log1p(-r * r), i, j});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  Dsu dsu(p);
  std::vector<std::pair<int, int>> tree;
  tree.reserve(p - 1);
  for (const Edge& e : edges) {
    if (dsu.unite(e.i, e.j)) {
      tree.emplace_back(e.i, e.j);
      if (static_cast<int>(tree.size()) == p - 1) break;
    }
  }
  std::sort(tree.begin(), tree.end());
  return tree;
}

bool forest_pattern(const Eigen::MatrixXd& m, double tol) {
  const int p = static_cast<int>(m.rows());
  Dsu dsu(p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (std::abs(m(i, j)) >= tol && !dsu.unite(i, j)) return false;
  return true;
}

StandardizedCov standardize(const CovMatrix& c) {
  const int p = c.dim();
  Eigen::VectorXd d = c.sigma.diagonal();
  if ((d.array() <= 0.0).any())
    throw numeric_error("standardize: nonpositive diagonal entry");
  Eigen::VectorXd scale = d.array().sqrt();
  if (c.unit_diagonal) return {c, scale};
  Eigen::VectorXd inv = scale.cwiseInverse();
  Eigen::MatrixXd out = inv.asDiagonal() * c.sigma * inv.asDiagonal();
  out.diagonal().setOnes();
  out = ((out + out.transpose()) / 2.0).eval();
  return {wrap_cov(std::move(out)), scale};
}

}  // namespace knocksim
