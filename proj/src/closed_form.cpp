#include "herdval/closed_form.hpp"

#include <cmath>

namespace herdval {

namespace cf {

namespace {

void check_rate(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("closed form: rate must be positive");
}

void check_unit(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(std::string("closed form: ") + name + " outside [0,1]");
  }
}

}  // namespace

double s_term(double rate, double x) {
  const double e = std::exp(-rate * x);
  return (2.0 - (2.0 + rate * x) * e) / rate;
}

double t_term(double rate, double x) {
  const double rx = rate * x;
  const double e = std::exp(-2.0 * rx);
  return (5.0 - (5.0 + 6.0 * rx + 2.0 * rx * rx) * e) / (4.0 * rate);
}

double b_term(double rate, double u, double v) {
  const double r = std::abs(u - v);
  const double tr = rate * r;
  const double e = std::exp(-tr);
  return e / (6.0 * rate) * (15.0 * (1.0 + tr) + 6.0 * tr * tr + tr * tr * tr);
}

double c_term(double rate, double u, double v) {
  const double s = u + v;
  const double e = std::exp(-rate * s);
  return e / (4.0 * rate) * (5.0 + 3.0 * rate * s + 2.0 * rate * rate * u * v);
}

double g_term(double rate, double u, double v) {
  const double s = u + v;
  const double e = std::exp(-rate * (1.0 + s));
  return e / (16.0 * rate * rate) *
         (21.0 + rate * (9.0 + 13.0 * s) + rate * rate * (6.0 * s + 8.0 * u * v) +
          4.0 * rate * rate * rate * u * v);
}

double h_term(double rate, double u, double v) {
  const double s = u + v;
  const double rs = rate * s;
  const double e = std::exp(-rs);
  return e / (24.0 * rate * rate) *
         (126.0 + 96.0 * rs + 24.0 * rs * rs + 3.0 * rs * rs * rs +
          rate * rate * u * v *
              (24.0 + 6.0 * rs + 2.0 * rate * rate * (u * u + v * v)));
}

double i_term(double rate, double u, double v) {
  const double tr = rate * std::abs(u - v);
  const double e = std::exp(-tr);
  const double tr2 = tr * tr;
  return e / (120.0 * rate * rate) *
         (945.0 + 945.0 * tr + 420.0 * tr2 + 105.0 * tr2 * tr + 15.0 * tr2 * tr2 +
          tr2 * tr2 * tr);
}

double potential_uniform_1d(double rate, double x) {
  check_rate(rate);
  check_unit(x, "x");
  return s_term(rate, x) + s_term(rate, 1.0 - x);
}

double energy_uniform_1d(double rate) {
  check_rate(rate);
  return 2.0 / (rate * rate) * ((rate + 3.0) * std::exp(-rate) + 2.0 * rate - 3.0);
}

double potential_sq_uniform_1d(double rate, double x) {
  check_rate(rate);
  check_unit(x, "x");
  return t_term(rate, x) + t_term(rate, 1.0 - x);
}

double energy_sq_uniform_1d(double rate) {
  check_rate(rate);
  return ((2.0 * rate * rate + 8.0 * rate + 9.0) * std::exp(-2.0 * rate) + 10.0 * rate - 9.0) /
         (4.0 * rate * rate);
}

double beta_1d(double rate, double u, double v) {
  check_rate(rate);
  check_unit(u, "u");
  check_unit(v, "v");
  return b_term(rate, u, v) - c_term(rate, u, v) - c_term(rate, 1.0 - u, 1.0 - v);
}

double gamma_1d(double rate, double u, double v) {
  check_rate(rate);
  check_unit(u, "u");
  check_unit(v, "v");
  return g_term(rate, u, 1.0 - v) + g_term(rate, v, 1.0 - u) - h_term(rate, u, v) -
         h_term(rate, 1.0 - u, 1.0 - v) + i_term(rate, u, v);
}

}  // namespace cf

SeparableMuCache::SeparableMuCache(const ProductMatern32& kernel, Points x_n)
    : rates_(kernel.rates()), xn_(std::move(x_n)) {
  const Index n = xn_.cols();
  if (n > 0 && xn_.rows() != kernel.dim()) {
    throw std::invalid_argument("SeparableMuCache: design dimension mismatch");
  }
  const int d = dim();
  omega_.resize(n, n);
  gamma_.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = j; k < n; ++k) {
      double om = 1.0, gm = 1.0;
      for (int i = 0; i < d; ++i) {
        om *= cf::beta_1d(rates_[i], xn_(i, j), xn_(i, k));
        gm *= cf::gamma_1d(rates_[i], xn_(i, j), xn_(i, k));
      }
      omega_(j, k) = omega_(k, j) = om;
      gamma_(j, k) = gamma_(k, j) = gm;
    }
  }
  double energy_sq_mu = energy_sq();
  if (n == 0) {
    energy_validation_ = 2.0 * energy_sq_mu + 1.0;
    return;
  }
  fact_ = factorize_spd(gram(kernel, xn_), "separable mu cache design");
  const Matrix kninv_omega = fact_.solve(omega_);
  const Matrix kninv_gamma = fact_.solve(gamma_);
  trace_kninv_omega_ = kninv_omega.trace();
  trace_kninv_gamma_ = kninv_gamma.trace();
  // tr[(K_n^{-1} Omega)^2] without forming the product
  const double tr_sq = (kninv_omega.array() * kninv_omega.transpose().array()).sum();
  const double one_minus = 1.0 - trace_kninv_omega_;
  energy_validation_ =
      2.0 * energy_sq_mu - 4.0 * trace_kninv_gamma_ + 2.0 * tr_sq + one_minus * one_minus;
}

double SeparableMuCache::potential_plain(ConstPointRef x) const {
  double out = 1.0;
  for (int i = 0; i < dim(); ++i) out *= cf::potential_uniform_1d(rates_[i], x[i]);
  return out;
}

double SeparableMuCache::energy_plain() const {
  double out = 1.0;
  for (int i = 0; i < dim(); ++i) out *= cf::energy_uniform_1d(rates_[i]);
  return out;
}

double SeparableMuCache::potential_sq(ConstPointRef x) const {
  double out = 1.0;
  for (int i = 0; i < dim(); ++i) out *= cf::potential_sq_uniform_1d(rates_[i], x[i]);
  return out;
}

double SeparableMuCache::energy_sq() const {
  double out = 1.0;
  for (int i = 0; i < dim(); ++i) out *= cf::energy_sq_uniform_1d(rates_[i]);
  return out;
}

Vector SeparableMuCache::omega_vector(ConstPointRef x) const {
  const Index n = xn_.cols();
  Vector w(n);
  for (Index j = 0; j < n; ++j) {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= cf::beta_1d(rates_[i], xn_(i, j), x[i]);
    w[j] = v;
  }
  return w;
}

double SeparableMuCache::potential_validation(ConstPointRef x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("SeparableMuCache: point dimension mismatch");
  }
  const double p_sq = potential_sq(x);
  if (xn_.cols() == 0) return 2.0 * p_sq + 1.0;
  Vector kn(xn_.cols());
  for (Index j = 0; j < xn_.cols(); ++j) {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= matern32_rate(rates_[i], x[i] - xn_(i, j));
    kn[j] = v;
  }
  const Vector a = fact_.solve(kn);
  const double cond_diag = 1.0 - kn.dot(a);
  return 2.0 * p_sq - 4.0 * a.dot(omega_vector(x)) + 2.0 * a.dot(omega_ * a) +
         cond_diag * (1.0 - trace_kninv_omega_);
}

SeparableMuCache build_mu_cache(const ProductMatern32& kernel, Points x_n) {
  return SeparableMuCache(kernel, std::move(x_n));
}

UniformProductMu::UniformProductMu(std::shared_ptr<const ProductMatern32> kernel)
    : kernel_(std::move(kernel)) {
  if (!kernel_) throw std::invalid_argument("UniformProductMu: null kernel");
  energy_ = 1.0;
  for (int i = 0; i < kernel_->dim(); ++i) {
    energy_ *= cf::energy_uniform_1d(kernel_->rates()[i]);
  }
}

double UniformProductMu::potential(ConstPointRef x) const {
  double out = 1.0;
  for (int i = 0; i < kernel_->dim(); ++i) {
    out *= cf::potential_uniform_1d(kernel_->rates()[i], x[i]);
  }
  return out;
}

void UniformProductMu::potential_row(const Points& pts, Eigen::Ref<Vector> out) const {
  out.setOnes();
  for (int i = 0; i < kernel_->dim(); ++i) {
    const double rate = kernel_->rates()[i];
    for (Index j = 0; j < pts.cols(); ++j) {
      out[j] *= cf::potential_uniform_1d(rate, pts(i, j));
    }
  }
}

UniformValidationMu::UniformValidationMu(std::shared_ptr<const ValidationKernel> kernel)
    : kernel_(std::move(kernel)),
      cache_([this]() -> SeparableMuCache {
        const auto* prod =
            dynamic_cast<const ProductMatern32*>(&kernel_->conditional().base());
        if (prod == nullptr) {
          throw std::invalid_argument(
              "UniformValidationMu: closed forms require a separable Matern 3/2 base");
        }
        return SeparableMuCache(*prod, kernel_->conditional().conditioning());
      }()) {}

double UniformValidationMu::potential(ConstPointRef x) const {
  return cache_.potential_validation(x);
}

}  // namespace herdval
