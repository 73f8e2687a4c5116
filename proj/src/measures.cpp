#include "herdval/measures.hpp"

#include <sstream>

namespace herdval {

namespace {
constexpr double kZeroRowTol = 1e-12;
}

DiscreteMeasure DiscreteMeasure::uniform(Points pts) {
  DiscreteMeasure m;
  const Index k = pts.cols();
  if (k == 0) throw std::invalid_argument("DiscreteMeasure::uniform: empty support");
  m.support = std::move(pts);
  m.weights = Vector::Constant(k, 1.0 / static_cast<double>(k));
  return m;
}

DiscreteMeasure DiscreteMeasure::delta(Vector point) {
  DiscreteMeasure m;
  m.support = point;
  m.weights = Vector::Ones(1);
  return m;
}

DiscreteMeasure DiscreteMeasure::difference(const DiscreteMeasure& xi,
                                            const DiscreteMeasure& nu) {
  if (xi.support.rows() != nu.support.rows()) {
    throw std::invalid_argument("DiscreteMeasure::difference: dimension mismatch");
  }
  DiscreteMeasure m;
  m.support.resize(xi.support.rows(), xi.size() + nu.size());
  m.support << xi.support, nu.support;
  m.weights.resize(xi.size() + nu.size());
  m.weights << xi.weights, -nu.weights;
  return m;
}

double energy(const Kernel& kernel, const DiscreteMeasure& xi) {
  const Index k = xi.size();
  if (k == 0) return 0.0;
  if (k > 128) {
    auto bound = kernel.bind(xi.support);
    Vector buf(k);
    double e = 0.0;
    for (Index i = 0; i < k; ++i) {
      bound->row(xi.support.col(i), buf);
      e += xi.weights[i] * xi.weights.dot(buf);
    }
    return e;
  }
  double e = 0.0;
  for (Index i = 0; i < k; ++i) {
    e += xi.weights[i] * xi.weights[i] * kernel.diag(xi.support.col(i));
    for (Index j = i + 1; j < k; ++j) {
      e += 2.0 * xi.weights[i] * xi.weights[j] * kernel(xi.support.col(i), xi.support.col(j));
    }
  }
  return e;
}

double cross_energy(const Kernel& kernel, const DiscreteMeasure& xi,
                    const DiscreteMeasure& nu) {
  Vector buf(nu.size());
  double e = 0.0;
  for (Index i = 0; i < xi.size(); ++i) {
    kernel.row(xi.support.col(i), nu.support, buf);
    e += xi.weights[i] * nu.weights.dot(buf);
  }
  return e;
}

double potential(const Kernel& kernel, const DiscreteMeasure& xi, ConstPointRef x) {
  Vector buf(xi.size());
  kernel.row(x, xi.support, buf);
  return xi.weights.dot(buf);
}

void Mu::potential_row(const Points& pts, Eigen::Ref<Vector> out) const {
  for (Index j = 0; j < pts.cols(); ++j) out[j] = potential(pts.col(j));
}

DiscreteMu::DiscreteMu(std::shared_ptr<const Kernel> kernel, DiscreteMeasure mu)
    : kernel_(std::move(kernel)), mu_(std::move(mu)) {
  if (!kernel_) throw std::invalid_argument("DiscreteMu: null kernel");
  if (mu_.size() == 0) throw std::invalid_argument("DiscreteMu: empty support");
  if (mu_.support.rows() != kernel_->dim()) {
    throw std::invalid_argument("DiscreteMu: support dimension mismatch");
  }
  bound_ = kernel_->bind(mu_.support);
}

double DiscreteMu::potential(ConstPointRef x) const {
  Vector buf(mu_.size());
  bound_->row(x, buf);
  return mu_.weights.dot(buf);
}

void DiscreteMu::potential_row(const Points& pts, Eigen::Ref<Vector> out) const {
  Vector buf(mu_.size());
  for (Index j = 0; j < pts.cols(); ++j) {
    bound_->row(pts.col(j), buf);
    out[j] = mu_.weights.dot(buf);
  }
}

double DiscreteMu::energy() const {
  std::call_once(energy_once_, [this] {
    Vector buf(mu_.size());
    double e = 0.0;
    for (Index i = 0; i < mu_.size(); ++i) {
      bound_->row(mu_.support.col(i), buf);
      e += mu_.weights[i] * mu_.weights.dot(buf);
    }
    energy_value_ = e;
  });
  return energy_value_;
}

MmdResult mmd_squared(const DiscreteMeasure& zeta, const Mu& mu) {
  const Index k = zeta.size();
  const Matrix ck = gram(mu.kernel(), zeta.support);
  Vector p(k);
  mu.potential_row(zeta.support, p);
  double v = zeta.weights.dot(ck * zeta.weights) - 2.0 * zeta.weights.dot(p) + mu.energy();
  MmdResult r;
  if (v < 0.0) {
    r.value = 0.0;
    r.clamped = true;
  } else {
    r.value = v;
  }
  return r;
}

double directional_derivative(const DiscreteMeasure& xi, const Mu& mu, ConstPointRef x) {
  const double p_xi = potential(mu.kernel(), xi, x);
  const double p_mu = mu.potential(x);
  const double e_xi = energy(mu.kernel(), xi);
  Vector pm(xi.size());
  mu.potential_row(xi.support, pm);
  const double e_cross = xi.weights.dot(pm);
  return 2.0 * (p_xi - p_mu - e_xi + e_cross);
}

namespace {

std::vector<Index> zero_rows(const Matrix& g) {
  std::vector<Index> out;
  for (Index i = 0; i < g.rows(); ++i) {
    if (g.row(i).cwiseAbs().maxCoeff() < kZeroRowTol) out.push_back(i);
  }
  return out;
}

}  // namespace

Vector optimal_weights_sum1(const Points& support, const Mu& mu) {
  const Index k = support.cols();
  if (k == 0) throw std::invalid_argument("optimal_weights_sum1: empty support");
  const Matrix ck = gram(mu.kernel(), support);
  if (!zero_rows(ck).empty()) {
    throw WeightSolveError(
        "optimal_weights_sum1: Gram matrix has a vanishing row (support point in the "
        "conditioning design?); the sum-to-one weights are undefined");
  }
  Eigen::LLT<Matrix> llt(ck);
  if (llt.info() != Eigen::Success) {
    throw WeightSolveError("optimal_weights_sum1: singular Gram matrix on support");
  }
  Vector p(k);
  mu.potential_row(support, p);
  const Vector a = llt.solve(p);
  const Vector b = llt.solve(Vector::Ones(k));
  const double denom = b.sum();
  if (!(std::abs(denom) > 0.0) || !a.allFinite() || !b.allFinite()) {
    throw WeightSolveError("optimal_weights_sum1: degenerate Gram system");
  }
  return a + b * ((1.0 - a.sum()) / denom);
}

FreeWeights optimal_weights_free(const Points& support, const Mu& mu) {
  const Index k = support.cols();
  if (k == 0) throw std::invalid_argument("optimal_weights_free: empty support");
  const Matrix ck = gram(mu.kernel(), support);
  FreeWeights out;
  out.weights = Vector::Zero(k);
  out.pruned = zero_rows(ck);
  std::vector<Index> kept;
  kept.reserve(k);
  {
    std::size_t pi = 0;
    for (Index i = 0; i < k; ++i) {
      if (pi < out.pruned.size() && out.pruned[pi] == i) {
        ++pi;
      } else {
        kept.push_back(i);
      }
    }
  }
  if (kept.empty()) return out;

  Matrix ckk(kept.size(), kept.size());
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = 0; b < kept.size(); ++b) {
      ckk(static_cast<Index>(a), static_cast<Index>(b)) = ck(kept[a], kept[b]);
    }
  }
  Points sub(support.rows(), static_cast<Index>(kept.size()));
  for (std::size_t a = 0; a < kept.size(); ++a) sub.col(static_cast<Index>(a)) = support.col(kept[a]);
  Vector p(sub.cols());
  mu.potential_row(sub, p);

  Eigen::LLT<Matrix> llt(ckk);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "optimal_weights_free: Gram matrix singular after pruning " << out.pruned.size()
       << " zero rows (duplicate support points?)";
    throw WeightSolveError(os.str());
  }
  const Vector w = llt.solve(p);
  for (std::size_t a = 0; a < kept.size(); ++a) out.weights[kept[a]] = w[static_cast<Index>(a)];
  return out;
}

}  // namespace herdval
