#include "herdval/kernels.hpp"

#include <cmath>
#include <sstream>

namespace herdval {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

void check_theta(double theta) {
  if (!(theta > 0.0)) {
    throw std::invalid_argument("Matern 3/2: theta must be positive, got " +
                                std::to_string(theta));
  }
}

void check_dims(ConstPointRef x, ConstPointRef y, int d) {
  if (x.size() != d || y.size() != d) {
    std::ostringstream os;
    os << "kernel dimension mismatch: expected " << d << ", got " << x.size()
       << " and " << y.size();
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

double matern32_rate(double rate, double r) {
  const double t = rate * std::abs(r);
  return (1.0 + t) * std::exp(-t);
}

double matern32(double theta, double r) { return matern32_rate(kSqrt3 * theta, r); }

double matern32_univariate(double theta, double x, double x_prime) {
  check_theta(theta);
  return matern32(theta, x - x_prime);
}

double matern32_isotropic(double theta, ConstPointRef x, ConstPointRef x_prime) {
  check_theta(theta);
  if (x.size() != x_prime.size()) {
    throw std::invalid_argument("matern32_isotropic: dimension mismatch");
  }
  return matern32(theta, (x - x_prime).norm());
}

double matern32_product(double theta, ConstPointRef x, ConstPointRef x_prime) {
  check_theta(theta);
  if (x.size() != x_prime.size()) {
    throw std::invalid_argument("matern32_product: dimension mismatch");
  }
  double out = 1.0;
  for (Index i = 0; i < x.size(); ++i) {
    out *= matern32(theta, x[i] - x_prime[i]);
  }
  return out;
}

void Kernel::row(ConstPointRef x, const Points& pts, Eigen::Ref<Vector> out) const {
  for (Index j = 0; j < pts.cols(); ++j) {
    out[j] = (*this)(x, pts.col(j));
  }
}

namespace {

// Fallback: no per-point state, rows delegate to the kernel.
class GenericBound final : public BoundKernel {
 public:
  GenericBound(const Kernel& k, Points pts) : BoundKernel(std::move(pts)), k_(k) {}
  void row(ConstPointRef x, Eigen::Ref<Vector> out) const override { k_.row(x, pts_, out); }
  double diag(Index j) const override { return k_.diag(pts_.col(j)); }

 private:
  const Kernel& k_;
};

}  // namespace

std::unique_ptr<BoundKernel> Kernel::bind(Points pts) const {
  if (pts.rows() != dim()) {
    throw std::invalid_argument("Kernel::bind: point dimension mismatch");
  }
  return std::make_unique<GenericBound>(*this, std::move(pts));
}

Matrix gram(const Kernel& k, const Points& pts) {
  const Index m = pts.cols();
  Matrix g(m, m);
  if (m > 128) {
    // Bound evaluation amortizes the per-point solves of conditional kernels.
    auto bound = k.bind(pts);
    Vector buf(m);
    for (Index i = 0; i < m; ++i) {
      bound->row(pts.col(i), buf);
      g.col(i) = buf;
    }
    g = 0.5 * (g + g.transpose());  // symmetrize roundoff
    return g;
  }
  for (Index i = 0; i < m; ++i) {
    g(i, i) = k.diag(pts.col(i));
    for (Index j = i + 1; j < m; ++j) {
      g(i, j) = g(j, i) = k(pts.col(i), pts.col(j));
    }
  }
  return g;
}

Matrix cross_gram(const Kernel& k, const Points& a, const Points& b) {
  Matrix g(a.cols(), b.cols());
  Vector buf(b.cols());
  for (Index i = 0; i < a.cols(); ++i) {
    k.row(a.col(i), b, buf);
    g.row(i) = buf.transpose();
  }
  return g;
}

SpdFactor factorize_spd(Matrix g, const std::string& what) {
  SpdFactor f;
  f.size = g.rows();
  if (g.rows() == 0) return f;
  const double scale = g.trace() / static_cast<double>(g.rows());
  const double levels[] = {0.0, 1e-12, 1e-10, 1e-8};
  for (double lvl : levels) {
    Matrix jittered = g;
    if (lvl > 0.0) jittered.diagonal().array() += lvl * scale;
    f.llt.compute(jittered);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = lvl * scale;
      return f;
    }
  }
  std::ostringstream os;
  os << "Gram matrix for " << what << " (" << g.rows() << "x" << g.cols()
     << ") is not positive definite after jitter escalation";
  throw FactorizationError(os.str());
}

UnivariateMatern32::UnivariateMatern32(double theta) : rate_(kSqrt3 * theta) {
  check_theta(theta);
}

double UnivariateMatern32::operator()(ConstPointRef x, ConstPointRef y) const {
  check_dims(x, y, 1);
  return matern32_rate(rate_, x[0] - y[0]);
}

void UnivariateMatern32::row(ConstPointRef x, const Points& pts,
                             Eigen::Ref<Vector> out) const {
  auto t = (rate_ * (pts.row(0).transpose().array() - x[0]).abs()).eval();
  out = ((1.0 + t) * (-t).exp()).matrix();
}

IsotropicMatern32::IsotropicMatern32(int dim, double theta)
    : dim_(dim), rate_(kSqrt3 * theta) {
  check_theta(theta);
  if (dim < 1) throw std::invalid_argument("IsotropicMatern32: dim must be >= 1");
}

double IsotropicMatern32::operator()(ConstPointRef x, ConstPointRef y) const {
  check_dims(x, y, dim_);
  return matern32_rate(rate_, (x - y).norm());
}

void IsotropicMatern32::row(ConstPointRef x, const Points& pts,
                            Eigen::Ref<Vector> out) const {
  auto t = (rate_ * (pts.colwise() - x).colwise().norm().transpose().array()).eval();
  out = ((1.0 + t) * (-t).exp()).matrix();
}

ProductMatern32::ProductMatern32(int dim, double theta) {
  check_theta(theta);
  if (dim < 1) throw std::invalid_argument("ProductMatern32: dim must be >= 1");
  rates_ = Vector::Constant(dim, kSqrt3 * theta);
}

ProductMatern32::ProductMatern32(Vector thetas) {
  if (thetas.size() < 1) throw std::invalid_argument("ProductMatern32: empty theta vector");
  for (Index i = 0; i < thetas.size(); ++i) check_theta(thetas[i]);
  rates_ = kSqrt3 * thetas;
}

double ProductMatern32::operator()(ConstPointRef x, ConstPointRef y) const {
  check_dims(x, y, dim());
  double out = 1.0;
  for (Index i = 0; i < rates_.size(); ++i) {
    out *= matern32_rate(rates_[i], x[i] - y[i]);
  }
  return out;
}

void ProductMatern32::row(ConstPointRef x, const Points& pts,
                          Eigen::Ref<Vector> out) const {
  out.setOnes();
  for (Index i = 0; i < rates_.size(); ++i) {
    auto t = (rates_[i] * (pts.row(i).transpose().array() - x[i]).abs()).eval();
    out.array() *= (1.0 + t) * (-t).exp();
  }
}

SquaredKernel::SquaredKernel(std::shared_ptr<const Kernel> base) : base_(std::move(base)) {
  if (!base_) throw std::invalid_argument("SquaredKernel: null base");
}

double SquaredKernel::operator()(ConstPointRef x, ConstPointRef y) const {
  const double v = (*base_)(x, y);
  return v * v;
}

double SquaredKernel::diag(ConstPointRef x) const {
  const double v = base_->diag(x);
  return v * v;
}

void SquaredKernel::row(ConstPointRef x, const Points& pts, Eigen::Ref<Vector> out) const {
  base_->row(x, pts, out);
  out.array() *= out.array();
}

ConditionalKernel::ConditionalKernel(std::shared_ptr<const Kernel> base, Points conditioning)
    : base_(std::move(base)), xn_(std::move(conditioning)) {
  if (!base_) throw std::invalid_argument("ConditionalKernel: null base");
  if (xn_.cols() > 0 && xn_.rows() != base_->dim()) {
    throw std::invalid_argument("ConditionalKernel: conditioning dimension mismatch");
  }
  if (xn_.cols() > 0) {
    fact_ = factorize_spd(gram(*base_, xn_), "conditioning design");
  }
}

Vector ConditionalKernel::cross_vector(ConstPointRef x) const {
  Vector kn(xn_.cols());
  if (xn_.cols() > 0) base_->row(x, xn_, kn);
  return kn;
}

Vector ConditionalKernel::cross_solve(ConstPointRef x) const {
  if (xn_.cols() == 0) return Vector(0);
  return fact_.solve(cross_vector(x));
}

double ConditionalKernel::operator()(ConstPointRef x, ConstPointRef y) const {
  double v = (*base_)(x, y);
  if (xn_.cols() > 0) v -= cross_vector(x).dot(fact_.solve(cross_vector(y)));
  return v;
}

double ConditionalKernel::diag(ConstPointRef x) const {
  double v = base_->diag(x);
  if (xn_.cols() > 0) {
    const Vector kn = cross_vector(x);
    v -= kn.dot(fact_.solve(kn));
  }
  // negative values are solve roundoff, order 1e-12 at worst
  return v > 0.0 ? v : 0.0;
}

void ConditionalKernel::row(ConstPointRef x, const Points& pts,
                            Eigen::Ref<Vector> out) const {
  base_->row(x, pts, out);
  if (xn_.cols() == 0) return;
  const Vector ax = cross_solve(x);
  // out[j] -= k_n(p_j) . ax, one base row per conditioning point
  Vector kj(pts.cols());
  for (Index i = 0; i < xn_.cols(); ++i) {
    base_->row(xn_.col(i), pts, kj);
    out.noalias() -= ax[i] * kj;
  }
}

namespace {

class ConditionalBound final : public BoundKernel {
 public:
  ConditionalBound(const ConditionalKernel& k, Points pts)
      : BoundKernel(std::move(pts)), k_(k) {
    const Index q = pts_.cols();
    const Index n = k_.n();
    alpha_.resize(n, q);
    diag_.resize(q);
    if (n == 0) {
      for (Index j = 0; j < q; ++j) diag_[j] = k_.base().diag(pts_.col(j));
      return;
    }
    Matrix kn_pts(n, q);
    Vector buf(q);
    for (Index i = 0; i < n; ++i) {
      k_.base().row(k_.conditioning().col(i), pts_, buf);
      kn_pts.row(i) = buf.transpose();
    }
    alpha_ = k_.factor().solve(kn_pts);
    for (Index j = 0; j < q; ++j) {
      double v = k_.base().diag(pts_.col(j)) - kn_pts.col(j).dot(alpha_.col(j));
      diag_[j] = v < 0.0 ? 0.0 : v;
    }
  }

  void row(ConstPointRef x, Eigen::Ref<Vector> out) const override {
    k_.base().row(x, pts_, out);
    if (k_.n() == 0) return;
    out.noalias() -= alpha_.transpose() * k_.cross_vector(x);
  }

  double diag(Index j) const override { return diag_[j]; }
  const ConditionalKernel& kernel() const { return k_; }

 private:
  const ConditionalKernel& k_;
  Matrix alpha_;  // n x Q, column j = K_n^{-1} k_n(p_j)
  Vector diag_;
};

class ValidationBound final : public BoundKernel {
 public:
  ValidationBound(const ValidationKernel& k, Points pts)
      : BoundKernel(Points(pts)), cond_(k.conditional(), std::move(pts)) {}

  void row(ConstPointRef x, Eigen::Ref<Vector> out) const override {
    cond_.row(x, out);
    const double dx = cond_.kernel().diag(x);
    for (Index j = 0; j < out.size(); ++j) {
      out[j] = 2.0 * out[j] * out[j] + dx * cond_.diag(j);
    }
  }

  double diag(Index j) const override {
    const double v = cond_.diag(j);
    return 3.0 * v * v;
  }

 private:
  ConditionalBound cond_;
};

}  // namespace

std::unique_ptr<BoundKernel> ConditionalKernel::bind(Points pts) const {
  if (pts.rows() != dim()) {
    throw std::invalid_argument("ConditionalKernel::bind: point dimension mismatch");
  }
  return std::make_unique<ConditionalBound>(*this, std::move(pts));
}

ValidationKernel::ValidationKernel(std::shared_ptr<const ConditionalKernel> cond)
    : cond_(std::move(cond)) {
  if (!cond_) throw std::invalid_argument("ValidationKernel: null conditional kernel");
}

double ValidationKernel::operator()(ConstPointRef x, ConstPointRef y) const {
  const double c = (*cond_)(x, y);
  return 2.0 * c * c + cond_->diag(x) * cond_->diag(y);
}

double ValidationKernel::diag(ConstPointRef x) const {
  const double v = cond_->diag(x);
  return 3.0 * v * v;
}

void ValidationKernel::row(ConstPointRef x, const Points& pts,
                           Eigen::Ref<Vector> out) const {
  cond_->row(x, pts, out);
  const double dx = cond_->diag(x);
  for (Index j = 0; j < pts.cols(); ++j) {
    out[j] = 2.0 * out[j] * out[j] + dx * cond_->diag(pts.col(j));
  }
}

std::unique_ptr<BoundKernel> ValidationKernel::bind(Points pts) const {
  if (pts.rows() != dim()) {
    throw std::invalid_argument("ValidationKernel::bind: point dimension mismatch");
  }
  return std::make_unique<ValidationBound>(*this, std::move(pts));
}

std::shared_ptr<const Kernel> make_matern32_univariate(double theta) {
  return std::make_shared<UnivariateMatern32>(theta);
}

std::shared_ptr<const Kernel> make_matern32_isotropic(int dim, double theta) {
  return std::make_shared<IsotropicMatern32>(dim, theta);
}

std::shared_ptr<const ProductMatern32> make_matern32_product(int dim, double theta) {
  return std::make_shared<ProductMatern32>(dim, theta);
}

std::shared_ptr<const Kernel> make_squared(std::shared_ptr<const Kernel> base) {
  return std::make_shared<SquaredKernel>(std::move(base));
}

std::shared_ptr<const ConditionalKernel> make_conditional(std::shared_ptr<const Kernel> base,
                                                          Points conditioning) {
  return std::make_shared<ConditionalKernel>(std::move(base), std::move(conditioning));
}

std::shared_ptr<const ValidationKernel> make_validation(std::shared_ptr<const Kernel> base,
                                                        Points conditioning) {
  return std::make_shared<ValidationKernel>(
      make_conditional(std::move(base), std::move(conditioning)));
}

}  // namespace herdval
