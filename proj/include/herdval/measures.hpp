#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "herdval/kernels.hpp"

namespace herdval {

// Finitely supported signed measure. Plain herding iterates carry uniform
// weights 1/k; minimum-norm variants may carry negative weights.
struct DiscreteMeasure {
  Points support;  // d x k
  Vector weights;  // k

  Index size() const { return support.cols(); }

  static DiscreteMeasure uniform(Points pts);
  static DiscreteMeasure delta(Vector point);
  // The signed measure xi - nu, stacked on the combined support.
  static DiscreteMeasure difference(const DiscreteMeasure& xi, const DiscreteMeasure& nu);
};

double energy(const Kernel& kernel, const DiscreteMeasure& xi);
double cross_energy(const Kernel& kernel, const DiscreteMeasure& xi, const DiscreteMeasure& nu);
double potential(const Kernel& kernel, const DiscreteMeasure& xi, ConstPointRef x);

// Target measure bound to a kernel: supplies P_{C,mu}(x) and E_C(mu).
// Discrete and closed-form representations share this interface.
class Mu {
 public:
  virtual ~Mu() = default;
  virtual const Kernel& kernel() const = 0;
  virtual double potential(ConstPointRef x) const = 0;
  virtual void potential_row(const Points& pts, Eigen::Ref<Vector> out) const;
  virtual double energy() const = 0;
};

// mu_Q: uniform (or weighted) measure on a finite candidate set.
class DiscreteMu final : public Mu {
 public:
  DiscreteMu(std::shared_ptr<const Kernel> kernel, DiscreteMeasure mu);
  const Kernel& kernel() const override { return *kernel_; }
  const DiscreteMeasure& measure() const { return mu_; }
  double potential(ConstPointRef x) const override;
  void potential_row(const Points& pts, Eigen::Ref<Vector> out) const override;
  double energy() const override;

 private:
  std::shared_ptr<const Kernel> kernel_;
  DiscreteMeasure mu_;
  std::unique_ptr<BoundKernel> bound_;
  mutable std::once_flag energy_once_;
  mutable double energy_value_ = 0.0;
};

struct MmdResult {
  double value = 0.0;
  bool clamped = false;  // negative roundoff was clamped to zero
};

// E_C(zeta - mu) = w' C_k w - 2 w' p_{C,k}(mu) + E_C(mu).
MmdResult mmd_squared(const DiscreteMeasure& zeta, const Mu& mu);

// Directional derivative of the squared MMD at xi toward a point mass at x.
double directional_derivative(const DiscreteMeasure& xi, const Mu& mu, ConstPointRef x);

// Weights minimizing E_C(zeta - mu) under sum-to-one; throws WeightSolveError
// when the Gram matrix is singular (expected when the support meets the
// conditioning design of a validation kernel).
Vector optimal_weights_sum1(const Points& support, const Mu& mu);

struct FreeWeights {
  Vector weights;                // full support length; pruned entries are 0
  std::vector<Index> pruned;     // indices whose Gram row vanished
  double total_mass() const { return weights.sum(); }
};

// Unconstrained minimizer C_k^{-1} p_{C,k}(mu), with numerically-zero Gram
// rows pruned first.
FreeWeights optimal_weights_free(const Points& support, const Mu& mu);

}  // namespace herdval
