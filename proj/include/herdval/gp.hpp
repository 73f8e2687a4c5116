#pragma once

#include <functional>

#include "herdval/kernels.hpp"

namespace herdval {

using TruthFn = std::function<double(ConstPointRef)>;
using KernelFactory = std::function<std::shared_ptr<const Kernel>(double theta)>;

// Interpolating kriging predictor with empirical-mean centering. Posterior
// variance comes from the same conditional kernel used everywhere else.
class GpModel {
 public:
  GpModel(std::shared_ptr<const Kernel> kernel, Points x, Vector y, bool center = true);

  Index n() const { return cond_->n(); }
  int dim() const { return cond_->dim(); }
  const Points& design() const { return cond_->conditioning(); }
  const Vector& observations() const { return y_; }
  double mean() const { return ybar_; }

  double predict(ConstPointRef x) const;
  Vector predict_many(const Points& pts) const;
  double posterior_variance(ConstPointRef x) const { return cond_->diag(x); }

  const ConditionalKernel& conditional() const { return *cond_; }
  std::shared_ptr<const ConditionalKernel> conditional_ptr() const { return cond_; }

  // Closed-form leave-one-out mean squared prediction error.
  double loo_ise() const;

 private:
  std::shared_ptr<const ConditionalKernel> cond_;
  Vector y_;
  Vector alpha_;  // K_n^{-1} (y - ybar)
  double ybar_ = 0.0;
};

// (1/m) sum K_{|n}(z_i, z_i), or the weighted sum when weights are given.
// Negative weighted values are reported as-is.
double imse_hat(const ConditionalKernel& cond, const Points& z, const Vector* weights = nullptr);

struct ThetaFit {
  double theta = 0.0;
  double loo = 0.0;
};

// Grid search plus golden-section refinement of the LOO criterion.
ThetaFit fit_theta_loo(const Points& x, const Vector& y, const KernelFactory& factory,
                       double theta_lo, double theta_hi, int grid_points = 25,
                       double rel_tol = 1e-3, bool center = true);

double ise_reference(const GpModel& model, const TruthFn& truth, const Points& mu_q);
double ise_hat(const GpModel& model, const TruthFn& truth, const Points& z,
               const Vector* weights = nullptr);

// One design's view of the ISE estimation error: the reference value, the
// unweighted and weighted estimates, and their relative errors.
struct IseReport {
  double ise_ref = 0.0;
  double ise_unweighted = 0.0;
  double ise_weighted = 0.0;
  double rho_unweighted = 0.0;
  double rho_weighted = 0.0;
  bool rho_defined = true;        // false when the reference vanishes
  Vector per_point_sq_err;        // [f(z_i) - eta_n(z_i)]^2
};

IseReport make_ise_report(const GpModel& model, const TruthFn& truth, const Points& z,
                          const Vector& weights, double ise_ref);

}  // namespace herdval
