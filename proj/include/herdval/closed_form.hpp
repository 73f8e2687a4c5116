#pragma once

#include "herdval/measures.hpp"

namespace herdval {

// Closed-form potentials and energies of the Matern 3/2 kernel under the
// uniform measure on [0,1]. All functions take the exponential rate, i.e.
// the kernel reads (1 + rate*r) exp(-rate*r).
namespace cf {

double s_term(double rate, double x);
double t_term(double rate, double x);
double b_term(double rate, double u, double v);
double c_term(double rate, double u, double v);
double g_term(double rate, double u, double v);
double h_term(double rate, double u, double v);
double i_term(double rate, double u, double v);

double potential_uniform_1d(double rate, double x);     // int_0^1 K(x,t) dt
double energy_uniform_1d(double rate);                  // int int K
double potential_sq_uniform_1d(double rate, double x);  // int_0^1 K^2(x,t) dt
double energy_sq_uniform_1d(double rate);               // int int K^2
double beta_1d(double rate, double u, double v);        // int K(u,t) K(v,t) dt
double gamma_1d(double rate, double u, double v);       // int int K(u,t) K(v,s) K(t,s) dt ds

}  // namespace cf

// Per-design cache for the validation kernel of a separable Matern 3/2 base
// under uniform mu: the entrywise-product matrices and the assembled
// potential/energy. The energy assembly uses tr[(K_n^{-1} Omega)^2]; the
// regression tests pin this against a discrete-mu oracle.
class SeparableMuCache {
 public:
  SeparableMuCache(const ProductMatern32& kernel, Points x_n);

  Index n() const { return xn_.cols(); }
  int dim() const { return static_cast<int>(rates_.size()); }

  double potential_plain(ConstPointRef x) const;      // P_{K,mu}(x)
  double energy_plain() const;                        // E_K(mu)
  double potential_sq(ConstPointRef x) const;         // P_{K^2,mu}(x)
  double energy_sq() const;                           // E_{K^2}(mu)
  double potential_validation(ConstPointRef x) const; // P_{Kbar|n,mu}(x)
  double energy_validation() const { return energy_validation_; }

  Vector omega_vector(ConstPointRef x) const;  // entries prod_i beta(x_j_i, x_i)
  const Matrix& omega() const { return omega_; }
  const Matrix& gamma_matrix() const { return gamma_; }
  const SpdFactor& factor() const { return fact_; }
  double trace_kninv_omega() const { return trace_kninv_omega_; }
  double trace_kninv_gamma() const { return trace_kninv_gamma_; }

 private:
  Vector rates_;
  Points xn_;
  SpdFactor fact_;
  Matrix omega_;   // {prod_i beta(x_j_i, x_k_i)}_{j,k}
  Matrix gamma_;   // {prod_i gamma(x_j_i, x_k_i)}_{j,k}
  double trace_kninv_omega_ = 0.0;
  double trace_kninv_gamma_ = 0.0;
  double energy_validation_ = 0.0;
};

SeparableMuCache build_mu_cache(const ProductMatern32& kernel, Points x_n);

// Uniform mu on [0,1]^d for a separable Matern 3/2 kernel, closed form.
class UniformProductMu final : public Mu {
 public:
  explicit UniformProductMu(std::shared_ptr<const ProductMatern32> kernel);
  const Kernel& kernel() const override { return *kernel_; }
  double potential(ConstPointRef x) const override;
  void potential_row(const Points& pts, Eigen::Ref<Vector> out) const override;
  double energy() const override { return energy_; }

 private:
  std::shared_ptr<const ProductMatern32> kernel_;
  double energy_;
};

// Uniform mu on [0,1]^d for the validation kernel of a separable Matern 3/2
// base, via SeparableMuCache.
class UniformValidationMu final : public Mu {
 public:
  explicit UniformValidationMu(std::shared_ptr<const ValidationKernel> kernel);
  const Kernel& kernel() const override { return *kernel_; }
  double potential(ConstPointRef x) const override;
  double energy() const override { return cache_.energy_validation(); }
  const SeparableMuCache& cache() const { return cache_; }

 private:
  std::shared_ptr<const ValidationKernel> kernel_;
  SeparableMuCache cache_;
};

}  // namespace herdval
