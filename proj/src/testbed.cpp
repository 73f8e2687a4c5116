#include "herdval/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace herdval {

Points uniform_random(int dim, Index count, Rng& rng) {
  Points out(dim, count);
  for (Index j = 0; j < count; ++j) {
    for (int i = 0; i < dim; ++i) out(i, j) = rng.uniform01();
  }
  return out;
}

double legendre01(int degree, double x) {
  if (degree < 0 || degree > 12) {
    throw std::invalid_argument("legendre01: degree must be in 0..12");
  }
  const double t = 2.0 * x - 1.0;
  if (degree == 0) return 1.0;
  double prev = 1.0;
  double cur = t;
  for (int i = 1; i < degree; ++i) {
    const double next = ((2.0 * i + 1.0) * t * cur - i * prev) / (i + 1.0);
    prev = cur;
    cur = next;
  }
  return std::sqrt(2.0 * degree + 1.0) * cur;
}

namespace {

struct LatticeNode {
  double variance;
  std::vector<int> idx;
  int last_nonzero;  // children increment coordinates >= this
};

struct NodeLess {
  bool operator()(const LatticeNode& a, const LatticeNode& b) const {
    return a.variance < b.variance;
  }
};

double variance_of(const std::vector<int>& idx, const std::vector<double>& lambda) {
  double v = 1.0;
  for (int i : idx) v *= lambda[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

IndexSet build_index_set(int dim, Index target, int max_degree, int max_total_degree,
                         const std::vector<double>& lambda) {
  if (dim < 1) throw std::invalid_argument("build_index_set: dim must be >= 1");
  if (target < 1) throw std::invalid_argument("build_index_set: target must be >= 1");
  if (max_degree < 0 || max_total_degree < 0) {
    throw std::invalid_argument("build_index_set: infeasible constraints (empty set)");
  }
  if (static_cast<int>(lambda.size()) < max_degree + 1) {
    throw std::invalid_argument("build_index_set: lambda schedule shorter than max_degree+1");
  }
  for (int i = 0; i < max_degree; ++i) {
    if (lambda[static_cast<std::size_t>(i + 1)] > lambda[static_cast<std::size_t>(i)]) {
      throw std::invalid_argument("build_index_set: lambda schedule must be non-increasing");
    }
  }

  // Best-first walk of the lattice; each multi-index has one canonical parent
  // (its last nonzero coordinate decremented), so no visited set is needed.
  std::priority_queue<LatticeNode, std::vector<LatticeNode>, NodeLess> heap;
  heap.push({variance_of(std::vector<int>(static_cast<std::size_t>(dim), 0), lambda),
             std::vector<int>(static_cast<std::size_t>(dim), 0), 0});

  std::vector<std::vector<int>> picked;
  std::vector<double> vars;
  constexpr double kTieRelTol = 1e-12;
  while (!heap.empty()) {
    LatticeNode node = heap.top();
    heap.pop();
    if (static_cast<Index>(picked.size()) >= target) {
      // keep tied blocks whole, stop at the first strict drop
      if (node.variance < vars.back() * (1.0 - kTieRelTol)) break;
    }
    picked.push_back(node.idx);
    vars.push_back(node.variance);
    const int total = std::accumulate(node.idx.begin(), node.idx.end(), 0);
    for (int j = node.last_nonzero; j < dim; ++j) {
      if (node.idx[static_cast<std::size_t>(j)] + 1 > max_degree) continue;
      if (total + 1 > max_total_degree) continue;
      LatticeNode child = node;
      child.idx[static_cast<std::size_t>(j)] += 1;
      child.last_nonzero = j;
      child.variance = variance_of(child.idx, lambda);
      heap.push(std::move(child));
    }
  }
  if (picked.empty()) {
    throw std::invalid_argument("build_index_set: infeasible constraints (empty set)");
  }

  std::vector<Index> order(picked.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (vars[static_cast<std::size_t>(a)] != vars[static_cast<std::size_t>(b)]) {
      return vars[static_cast<std::size_t>(a)] > vars[static_cast<std::size_t>(b)];
    }
    return picked[static_cast<std::size_t>(a)] < picked[static_cast<std::size_t>(b)];
  });

  IndexSet out;
  out.indices.resize(static_cast<Index>(picked.size()), dim);
  out.variances.resize(static_cast<Index>(picked.size()));
  for (std::size_t i = 0; i < picked.size(); ++i) {
    for (int j = 0; j < dim; ++j) {
      out.indices(static_cast<Index>(i), j) = picked[order[i]][static_cast<std::size_t>(j)];
    }
    out.variances[static_cast<Index>(i)] = vars[order[i]];
  }
  return out;
}

Matrix random_rotation(int dim, Rng& rng) {
  if (dim < 2) throw std::invalid_argument("random_rotation: dim must be >= 2");
  if (dim == 2) {
    const double theta = 6.283185307179586477 * rng.uniform01();
    const double a = rng.uniform01() < 0.5 ? 1.0 : -1.0;
    // rotation for a = 1, reflection for a = -1; uniform over both components
    Matrix q(2, 2);
    q << std::cos(theta), std::sin(theta), -a * std::sin(theta), a * std::cos(theta);
    return q;
  }
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  Vector u = v / v.norm();
  const Matrix inner = random_rotation(dim - 1, rng);

  Matrix block = Matrix::Identity(dim, dim);
  block.bottomRightCorner(dim - 1, dim - 1) = inner;

  Vector w = -u;
  w[0] += 1.0;  // e1 - u
  const double nw2 = w.squaredNorm();
  if (nw2 < 1e-28) return block;  // u == e1: the reflection degenerates to identity
  const Matrix house = Matrix::Identity(dim, dim) - (2.0 / nw2) * (w * w.transpose());
  return house * block;
}

RandomPolynomial::RandomPolynomial(const Config& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.dim < 1) throw std::invalid_argument("RandomPolynomial: dim must be >= 1");
  if (cfg.max_degree > 12) {
    throw std::invalid_argument("RandomPolynomial: max_degree above supported Legendre range");
  }
  if (cfg.dim == 1) {
    q_ = Matrix::Identity(1, 1);
  } else {
    q_ = cfg.alpha * random_rotation(cfg.dim, rng) +
         (1.0 - cfg.alpha) * Matrix::Identity(cfg.dim, cfg.dim);
  }
  // Clamped below at 1 so the variance schedule stays decreasing.
  tau_ = std::max(q_.cwiseAbs().rowwise().sum().maxCoeff(), 1.0);

  std::vector<double> lambda(static_cast<std::size_t>(cfg.max_degree) + 1);
  double tpow = 1.0;
  for (int i = 0; i <= cfg.max_degree; ++i) {
    lambda[static_cast<std::size_t>(i)] = 1.0 / ((i + 1.0) * (i + 1.0) * tpow);
    tpow *= tau_;
  }
  set_ = build_index_set(cfg.dim, cfg.target_terms, cfg.max_degree, cfg.max_total_degree, lambda);

  beta_.resize(set_.size());
  for (Index i = 0; i < set_.size(); ++i) {
    beta_[i] = std::sqrt(set_.variances[i]) * rng.normal();
  }
}

double RandomPolynomial::operator()(ConstPointRef x) const {
  if (x.size() != cfg_.dim) {
    throw std::invalid_argument("RandomPolynomial: point dimension mismatch");
  }
  const Vector t = q_ * (x.array() - 0.5).matrix() + Vector::Constant(cfg_.dim, 0.5);
  // per-axis Legendre values up to max_degree, then products per multi-index
  Matrix leg(cfg_.max_degree + 1, cfg_.dim);
  for (int i = 0; i < cfg_.dim; ++i) {
    for (int deg = 0; deg <= cfg_.max_degree; ++deg) leg(deg, i) = legendre01(deg, t[i]);
  }
  double out = 0.0;
  for (Index m = 0; m < set_.size(); ++m) {
    double term = beta_[m];
    for (int i = 0; i < cfg_.dim; ++i) term *= leg(set_.indices(m, i), i);
    out += term;
  }
  return out;
}

Vector RandomPolynomial::eval_many(const Points& pts) const {
  Vector out(pts.cols());
  for (Index j = 0; j < pts.cols(); ++j) out[j] = (*this)(pts.col(j));
  return out;
}

}  // namespace herdval
