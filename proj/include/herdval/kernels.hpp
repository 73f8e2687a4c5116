#pragma once

#include <memory>

#include "herdval/common.hpp"

namespace herdval {

// Matern 3/2 with the usual parameterization: (1+sqrt(3) theta r) exp(-sqrt(3) theta r).
double matern32(double theta, double r);
// Same kernel in exponential-rate form: (1+rate r) exp(-rate r), rate = sqrt(3) theta.
double matern32_rate(double rate, double r);

double matern32_univariate(double theta, double x, double x_prime);
double matern32_isotropic(double theta, ConstPointRef x, ConstPointRef x_prime);
double matern32_product(double theta, ConstPointRef x, ConstPointRef x_prime);

class Kernel;

// A kernel paired with a fixed evaluation point set. Conditional kernels
// cache their per-point solves here (keyed by column index), which makes
// repeated row evaluations against the same set cheap.
class BoundKernel {
 public:
  virtual ~BoundKernel() = default;
  const Points& points() const { return pts_; }
  Index count() const { return pts_.cols(); }
  // out[j] = C(x, points().col(j))
  virtual void row(ConstPointRef x, Eigen::Ref<Vector> out) const = 0;
  virtual double diag(Index j) const = 0;  // C(p_j, p_j)

 protected:
  explicit BoundKernel(Points pts) : pts_(std::move(pts)) {}
  Points pts_;
};

class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual int dim() const = 0;
  virtual double operator()(ConstPointRef x, ConstPointRef y) const = 0;
  virtual double diag(ConstPointRef x) const { return (*this)(x, x); }
  // out[j] = C(x, pts.col(j)); overridden where a vectorized form exists.
  virtual void row(ConstPointRef x, const Points& pts, Eigen::Ref<Vector> out) const;
  // The kernel must outlive the returned object.
  virtual std::unique_ptr<BoundKernel> bind(Points pts) const;
};

Matrix gram(const Kernel& k, const Points& pts);
Matrix cross_gram(const Kernel& k, const Points& a, const Points& b);

// Symmetric positive-definite factorization with jitter escalation
// 0, 1e-12, 1e-10, 1e-8 times trace/n; throws FactorizationError after the
// last level.
struct SpdFactor {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
  Index size = 0;

  template <typename Derived>
  auto solve(const Eigen::MatrixBase<Derived>& rhs) const {
    return llt.solve(rhs.derived()).eval();
  }
};
SpdFactor factorize_spd(Matrix g, const std::string& what);

class UnivariateMatern32 final : public Kernel {
 public:
  explicit UnivariateMatern32(double theta);
  int dim() const override { return 1; }
  double operator()(ConstPointRef x, ConstPointRef y) const override;
  double diag(ConstPointRef) const override { return 1.0; }
  void row(ConstPointRef x, const Points& pts, Eigen::Ref<Vector> out) const override;
  double rate() const { return rate_; }

 private:
  double rate_;
};

class IsotropicMatern32 final : public Kernel {
 public:
  IsotropicMatern32(int dim, double theta);
  int dim() const override { return dim_; }
  double operator()(ConstPointRef x, ConstPointRef y) const override;
  double diag(ConstPointRef) const override { return 1.0; }
  void row(ConstPointRef x, const Points& pts, Eigen::Ref<Vector> out) const override;
  double rate() const { return rate_; }

 private:
  int dim_;
  double rate_;
};

class ProductMatern32 final : public Kernel {
 public:
  ProductMatern32(int dim, double theta);      // shared theta
  explicit ProductMatern32(Vector thetas);     // per-axis theta
  int dim() const override { return static_cast<int>(rates_.size()); }
  double operator()(ConstPointRef x, ConstPointRef y) const override;
  double diag(ConstPointRef) const override { return 1.0; }
  void row(ConstPointRef x, const Points& pts, Eigen::Ref<Vector> out) const override;
  const Vector& rates() const { return rates_; }

 private:
  Vector rates_;
};

class SquaredKernel final : public Kernel {
 public:
  explicit SquaredKernel(std::shared_ptr<const Kernel> base);
  int dim() const override { return base_->dim(); }
  double operator()(ConstPointRef x, ConstPointRef y) const override;
  double diag(ConstPointRef x) const override;
  void row(ConstPointRef x, const Points& pts, Eigen::Ref<Vector> out) const override;
  const Kernel& base() const { return *base_; }

 private:
  std::shared_ptr<const Kernel> base_;
};

// GP posterior covariance K_{|n}(x,y) = K(x,y) - k_n(x)' K_n^{-1} k_n(y).
// Vanishes on the conditioning design; an empty design gives back the base
// kernel.
class ConditionalKernel final : public Kernel {
 public:
  ConditionalKernel(std::shared_ptr<const Kernel> base, Points conditioning);
  int dim() const override { return base_->dim(); }
  double operator()(ConstPointRef x, ConstPointRef y) const override;
  double diag(ConstPointRef x) const override;
  void row(ConstPointRef x, const Points& pts, Eigen::Ref<Vector> out) const override;
  std::unique_ptr<BoundKernel> bind(Points pts) const override;

  const Kernel& base() const { return *base_; }
  std::shared_ptr<const Kernel> base_ptr() const { return base_; }
  const Points& conditioning() const { return xn_; }
  Index n() const { return xn_.cols(); }
  Vector cross_vector(ConstPointRef x) const;  // k_n(x)
  Vector cross_solve(ConstPointRef x) const;   // K_n^{-1} k_n(x)
  const SpdFactor& factor() const { return fact_; }

 private:
  std::shared_ptr<const Kernel> base_;
  Points xn_;
  SpdFactor fact_;
};

// Validation kernel 2 K_{|n}^2(x,y) + K_{|n}(x,x) K_{|n}(y,y).
class ValidationKernel final : public Kernel {
 public:
  explicit ValidationKernel(std::shared_ptr<const ConditionalKernel> cond);
  int dim() const override { return cond_->dim(); }
  double operator()(ConstPointRef x, ConstPointRef y) const override;
  double diag(ConstPointRef x) const override;
  void row(ConstPointRef x, const Points& pts, Eigen::Ref<Vector> out) const override;
  std::unique_ptr<BoundKernel> bind(Points pts) const override;

  const ConditionalKernel& conditional() const { return *cond_; }
  std::shared_ptr<const ConditionalKernel> conditional_ptr() const { return cond_; }

 private:
  std::shared_ptr<const ConditionalKernel> cond_;
};

std::shared_ptr<const Kernel> make_matern32_univariate(double theta);
std::shared_ptr<const Kernel> make_matern32_isotropic(int dim, double theta);
std::shared_ptr<const ProductMatern32> make_matern32_product(int dim, double theta);
std::shared_ptr<const Kernel> make_squared(std::shared_ptr<const Kernel> base);
std::shared_ptr<const ConditionalKernel> make_conditional(std::shared_ptr<const Kernel> base,
                                                          Points conditioning);
std::shared_ptr<const ValidationKernel> make_validation(std::shared_ptr<const Kernel> base,
                                                        Points conditioning);

}  // namespace herdval
