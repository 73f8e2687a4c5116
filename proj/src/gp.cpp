#include "herdval/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace herdval {

GpModel::GpModel(std::shared_ptr<const Kernel> kernel, Points x, Vector y, bool center)
    : y_(std::move(y)) {
  if (x.cols() != y_.size()) {
    throw std::invalid_argument("GpModel: design size and observation count differ");
  }
  cond_ = make_conditional(std::move(kernel), std::move(x));
  ybar_ = center && y_.size() > 0 ? y_.mean() : 0.0;
  if (y_.size() > 0) {
    alpha_ = cond_->factor().solve((y_.array() - ybar_).matrix());
  }
}

double GpModel::predict(ConstPointRef x) const {
  if (n() == 0) return ybar_;
  return cond_->cross_vector(x).dot(alpha_) + ybar_;
}

Vector GpModel::predict_many(const Points& pts) const {
  Vector out(pts.cols());
  if (n() == 0) {
    out.setConstant(ybar_);
    return out;
  }
  Vector kn(n());
  for (Index j = 0; j < pts.cols(); ++j) {
    cond_->base().row(pts.col(j), cond_->conditioning(), kn);
    out[j] = kn.dot(alpha_) + ybar_;
  }
  return out;
}

double GpModel::loo_ise() const {
  const Index m = n();
  if (m < 2) throw std::invalid_argument("loo_ise: need at least two observations");
  const Matrix kinv = cond_->factor().solve(Matrix::Identity(m, m));
  double acc = 0.0;
  for (Index i = 0; i < m; ++i) {
    const double e = alpha_[i] / kinv(i, i);  // leave-one-out residual
    acc += e * e;
  }
  return acc / static_cast<double>(m);
}

double imse_hat(const ConditionalKernel& cond, const Points& z, const Vector* weights) {
  if (weights != nullptr && weights->size() != z.cols()) {
    throw std::invalid_argument("imse_hat: weight count mismatch");
  }
  double acc = 0.0;
  for (Index i = 0; i < z.cols(); ++i) {
    const double v = cond.diag(z.col(i));
    acc += weights != nullptr ? (*weights)[i] * v : v;
  }
  if (weights == nullptr && z.cols() > 0) acc /= static_cast<double>(z.cols());
  return acc;
}

ThetaFit fit_theta_loo(const Points& x, const Vector& y, const KernelFactory& factory,
                       double theta_lo, double theta_hi, int grid_points, double rel_tol,
                       bool center) {
  if (x.cols() < 3) throw std::invalid_argument("fit_theta_loo: need at least three points");
  if (!(theta_lo > 0.0) || !(theta_hi >= theta_lo)) {
    throw std::invalid_argument("fit_theta_loo: invalid bracket");
  }
  if (grid_points < 1) throw std::invalid_argument("fit_theta_loo: empty grid");

  auto eval = [&](double theta) -> double {
    GpModel model(factory(theta), x, y, center);
    return model.loo_ise();
  };

  const double llo = std::log(theta_lo);
  const double lhi = std::log(theta_hi);
  double best_theta = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    const double f = grid_points == 1 ? 0.5 : static_cast<double>(i) / (grid_points - 1);
    grid[static_cast<std::size_t>(i)] = std::exp(llo + f * (lhi - llo));
  }
  for (int i = 0; i < grid_points; ++i) {
    try {
      const double v = eval(grid[static_cast<std::size_t>(i)]);
      if (v < best_val) {
        best_val = v;
        best_theta = grid[static_cast<std::size_t>(i)];
        best_idx = i;
      }
    } catch (const FactorizationError&) {
      // grid point numerically singular, skip
    }
  }
  if (best_idx < 0) {
    throw FactorizationError("fit_theta_loo: every grid point produced a singular Gram matrix");
  }
  if (grid_points == 1) return {best_theta, best_val};

  // golden-section refinement between the neighbors of the best grid point
  double a = std::log(grid[static_cast<std::size_t>(std::max(best_idx - 1, 0))]);
  double b = std::log(grid[static_cast<std::size_t>(std::min(best_idx + 1, grid_points - 1))]);
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  auto safe_eval = [&](double lt) -> double {
    try {
      return eval(std::exp(lt));
    } catch (const FactorizationError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  double fc = safe_eval(c);
  double fd = safe_eval(d);
  while (b - a > rel_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = safe_eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = safe_eval(d);
    }
  }
  const double lt = 0.5 * (a + b);
  const double v = safe_eval(lt);
  if (v < best_val) return {std::exp(lt), v};
  return {best_theta, best_val};
}

double ise_reference(const GpModel& model, const TruthFn& truth, const Points& mu_q) {
  if (mu_q.cols() == 0) throw std::invalid_argument("ise_reference: empty reference set");
  const Vector pred = model.predict_many(mu_q);
  double acc = 0.0;
  for (Index j = 0; j < mu_q.cols(); ++j) {
    const double e = pred[j] - truth(mu_q.col(j));
    acc += e * e;
  }
  return acc / static_cast<double>(mu_q.cols());
}

double ise_hat(const GpModel& model, const TruthFn& truth, const Points& z,
               const Vector* weights) {
  if (weights != nullptr && weights->size() != z.cols()) {
    throw std::invalid_argument("ise_hat: weight count mismatch");
  }
  const Vector pred = model.predict_many(z);
  double acc = 0.0;
  for (Index i = 0; i < z.cols(); ++i) {
    const double e = truth(z.col(i)) - pred[i];
    acc += weights != nullptr ? (*weights)[i] * e * e : e * e;
  }
  if (weights == nullptr && z.cols() > 0) acc /= static_cast<double>(z.cols());
  return acc;
}

IseReport make_ise_report(const GpModel& model, const TruthFn& truth, const Points& z,
                          const Vector& weights, double ise_ref) {
  if (weights.size() != z.cols()) {
    throw std::invalid_argument("make_ise_report: weight count mismatch");
  }
  IseReport r;
  r.ise_ref = ise_ref;
  const Vector pred = model.predict_many(z);
  r.per_point_sq_err.resize(z.cols());
  for (Index i = 0; i < z.cols(); ++i) {
    const double e = truth(z.col(i)) - pred[i];
    r.per_point_sq_err[i] = e * e;
  }
  r.ise_unweighted = z.cols() > 0 ? r.per_point_sq_err.mean() : 0.0;
  r.ise_weighted = weights.dot(r.per_point_sq_err);
  r.rho_defined = ise_ref > 0.0;
  if (r.rho_defined) {
    r.rho_unweighted = (r.ise_unweighted - ise_ref) / ise_ref;
    r.rho_weighted = (r.ise_weighted - ise_ref) / ise_ref;
  }
  return r;
}

}  // namespace herdval
