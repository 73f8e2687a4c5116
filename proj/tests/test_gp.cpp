#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "herdval/gp.hpp"
#include "herdval/sobol.hpp"
#include "herdval/testbed.hpp"

using namespace herdval;

namespace {

Points random_points(int d, Index count, Rng& rng) {
  Points p(d, count);
  for (Index j = 0; j < count; ++j) {
    for (int i = 0; i < d; ++i) p(i, j) = rng.uniform01();
  }
  return p;
}

Vector random_values(Index count, Rng& rng) {
  Vector v(count);
  for (Index i = 0; i < count; ++i) v[i] = rng.normal();
  return v;
}

// rejection sampling keeps the Gram matrices well conditioned
Points separated_points(int d, Index count, Rng& rng, double min_dist) {
  Points p(d, count);
  Index placed = 0;
  while (placed < count) {
    Vector x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.uniform01();
    bool ok = true;
    for (Index j = 0; j < placed; ++j) {
      if ((p.col(j) - x).norm() < min_dist) {
        ok = false;
        break;
      }
    }
    if (ok) p.col(placed++) = x;
  }
  return p;
}

// leave-one-out by explicit refits
double loo_brute(const std::shared_ptr<const Kernel>& k, const Points& x, const Vector& y) {
  const Index n = x.cols();
  const double ybar = y.mean();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    Points xr(x.rows(), n - 1);
    Vector yr(n - 1);
    Index t = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      xr.col(t) = x.col(j);
      yr[t] = y[j];
      ++t;
    }
    // keep the full-sample centering, as the closed form does
    GpModel sub(k, xr, (yr.array() - ybar).matrix().eval(), false);
    const double pred = sub.predict(x.col(i)) + ybar;
    acc += (y[i] - pred) * (y[i] - pred);
  }
  return acc / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("predictor interpolates") {
  Rng rng(1);
  const Points x = random_points(2, 15, rng);
  const Vector y = random_values(15, rng);
  GpModel model(make_matern32_isotropic(2, 4.0), x, y);
  for (Index i = 0; i < x.cols(); ++i) {
    CHECK(model.predict(x.col(i)) == doctest::Approx(y[i]).epsilon(1e-8));
  }
  const Vector many = model.predict_many(x);
  for (Index i = 0; i < x.cols(); ++i) CHECK(many[i] == doctest::Approx(y[i]).epsilon(1e-8));
}

TEST_CASE("constant observations predict the constant everywhere") {
  Rng rng(2);
  const Points x = random_points(1, 8, rng);
  GpModel model(make_matern32_univariate(5.0), x, Vector::Constant(8, 3.25));
  for (int t = 0; t < 10; ++t) {
    const Vector z = random_points(1, 1, rng).col(0);
    CHECK(model.predict(z) == doctest::Approx(3.25).epsilon(1e-12));
  }
  CHECK(model.loo_ise() == doctest::Approx(0.0));
}

TEST_CASE("prediction matches a dense-solve oracle") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const int d = 1 + static_cast<int>(rng.uniform01() * 3.0);
    const Index n = 5 + static_cast<Index>(rng.uniform01() * 25.0);
    const double sep =
        0.4 * std::pow(static_cast<double>(n), -1.0 / static_cast<double>(d));
    const Points x = separated_points(d, n, rng, sep);
    const Vector y = random_values(n, rng);
    auto k = make_matern32_isotropic(d, 4.0);
    GpModel model(k, x, y);

    const Matrix g = gram(*k, x);
    const double ybar = y.mean();
    const Vector alpha = g.fullPivLu().solve((y.array() - ybar).matrix());
    const Vector z = random_points(d, 1, rng).col(0);
    Vector kn(n);
    k->row(z, x, kn);
    CHECK(model.predict(z) == doctest::Approx(kn.dot(alpha) + ybar).epsilon(1e-10));
    const double var_oracle = 1.0 - kn.dot(g.fullPivLu().solve(kn));
    CHECK(model.posterior_variance(z) == doctest::Approx(var_oracle).epsilon(1e-9));
  }
}

TEST_CASE("posterior variance") {
  Rng rng(4);
  const Points x = random_points(2, 10, rng);
  const Vector y = random_values(10, rng);
  auto k = make_matern32_isotropic(2, 5.0);
  GpModel model(k, x, y);
  for (Index i = 0; i < x.cols(); ++i) {
    CHECK(model.posterior_variance(x.col(i)) <= 1e-10);
  }
  const Vector z = random_points(2, 1, rng).col(0);
  // identical to the conditional kernel diagonal by construction
  CHECK(model.posterior_variance(z) == model.conditional().diag(z));

  GpModel empty(k, Points(2, 0), Vector(0));
  CHECK(empty.posterior_variance(z) == 1.0);
  CHECK(empty.predict(z) == 0.0);
}

TEST_CASE("imse hat") {
  Rng rng(5);
  const Points x = random_points(2, 12, rng);
  auto cond = make_conditional(make_matern32_isotropic(2, 4.0), x);

  CHECK(imse_hat(*cond, x.leftCols(5)) <= 1e-10);  // zero variance on the design

  const Points z = random_points(2, 9, rng);
  const Vector w = Vector::Constant(9, 1.0 / 9.0);
  CHECK(imse_hat(*cond, z, &w) == doctest::Approx(imse_hat(*cond, z)).epsilon(1e-13));
  const Vector bad = Vector::Ones(2);
  CHECK_THROWS_AS(imse_hat(*cond, z, &bad), std::invalid_argument);

  // free weights may be negative; the weighted value is reported signed
  const Vector negw = Vector::Constant(9, -0.2);
  CHECK(imse_hat(*cond, z, &negw) < 0.0);
}

TEST_CASE("closed-form leave-one-out equals brute-force refits") {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const int d = 1 + static_cast<int>(rng.uniform01() * 2.0);
    const Index n = 5 + static_cast<Index>(rng.uniform01() * 35.0);
    const Points x = random_points(d, n, rng);
    const Vector y = random_values(n, rng);
    auto k = make_matern32_isotropic(d, 3.0);
    GpModel model(k, x, y);
    const double closed = model.loo_ise();
    const double brute = loo_brute(k, x, y);
    CHECK(closed == doctest::Approx(brute).epsilon(1e-8));
  }
}

TEST_CASE("leave-one-out is permutation invariant") {
  Rng rng(7);
  const Points x = random_points(2, 12, rng);
  const Vector y = random_values(12, rng);
  auto k = make_matern32_isotropic(2, 4.0);
  GpModel a(k, x, y);

  std::vector<Index> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  Points xp(2, 12);
  Vector yp(12);
  for (Index i = 0; i < 12; ++i) {
    xp.col(i) = x.col(perm[static_cast<std::size_t>(i)]);
    yp[i] = y[perm[static_cast<std::size_t>(i)]];
  }
  GpModel b(k, xp, yp);
  CHECK(a.loo_ise() == doctest::Approx(b.loo_ise()).epsilon(1e-11));
}

TEST_CASE("bandwidth fit recovers the generating scale") {
  // data drawn from the model at theta*=10
  Rng rng(8);
  const Index n = 100;
  const Points x = random_points(1, n, rng);
  auto ktrue = make_matern32_univariate(10.0);
  Matrix g = gram(*ktrue, x);
  g.diagonal().array() += 1e-10;
  const Matrix chol = g.llt().matrixL();
  const Vector y = chol * random_values(n, rng);

  const KernelFactory factory = [](double theta) -> std::shared_ptr<const Kernel> {
    return make_matern32_univariate(theta);
  };
  const ThetaFit fit = fit_theta_loo(x, y, factory, 1.0, 100.0);
  CHECK(fit.theta >= 10.0 / 3.0);
  CHECK(fit.theta <= 30.0);

  // scaling the data leaves the minimizer unchanged
  const ThetaFit fit2 = fit_theta_loo(x, (5.0 * y).eval(), factory, 1.0, 100.0);
  CHECK(fit2.theta == doctest::Approx(fit.theta).epsilon(1e-12));
  CHECK(fit2.loo == doctest::Approx(25.0 * fit.loo).epsilon(1e-9));

  // a single grid point is returned as-is
  const ThetaFit single = fit_theta_loo(x, y, factory, 7.0, 7.0, 1);
  CHECK(single.theta == doctest::Approx(7.0));
}

TEST_CASE("ise reference and estimates") {
  Rng rng(9);
  const Points x = random_points(2, 20, rng);
  const Vector y = random_values(20, rng);
  auto k = make_matern32_isotropic(2, 4.0);
  GpModel model(k, x, y);
  const Points ref = SobolStream::generate(2, 1024, 11);

  SUBCASE("truth equal to the predictor gives zero") {
    const TruthFn truth = [&model](ConstPointRef z) { return model.predict(z); };
    CHECK(ise_reference(model, truth, ref) <= 1e-20);
    CHECK(ise_hat(model, truth, random_points(2, 10, rng)) <= 1e-20);
  }
  SUBCASE("designs inside the training set give zero unweighted error") {
    Rng trng(10);
    RandomPolynomial::Config pc;
    pc.dim = 2;
    pc.target_terms = 6;
    pc.max_degree = 3;
    RandomPolynomial poly(pc, trng);
    const TruthFn truth = [&poly](ConstPointRef z) { return poly(z); };
    const Vector yp = poly.eval_many(x);
    GpModel m2(k, x, yp);
    CHECK(ise_hat(m2, truth, x.leftCols(8)) <= 1e-16);
  }
  SUBCASE("report bundles estimates, relative errors, per-point errors") {
    Rng trng(12);
    RandomPolynomial::Config pc;
    pc.dim = 2;
    pc.target_terms = 6;
    pc.max_degree = 3;
    RandomPolynomial poly(pc, trng);
    const TruthFn truth = [&poly](ConstPointRef z) { return poly(z); };
    const Points z = random_points(2, 7, rng);
    Vector w(7);
    for (Index i = 0; i < 7; ++i) w[i] = rng.uniform01() - 0.3;
    const double iref = ise_reference(model, truth, ref);
    const IseReport r = make_ise_report(model, truth, z, w, iref);
    CHECK(r.ise_unweighted == doctest::Approx(ise_hat(model, truth, z)).epsilon(1e-13));
    CHECK(r.ise_weighted == doctest::Approx(ise_hat(model, truth, z, &w)).epsilon(1e-13));
    CHECK(r.rho_unweighted == doctest::Approx((r.ise_unweighted - iref) / iref));
    CHECK(r.rho_weighted == doctest::Approx((r.ise_weighted - iref) / iref));
    CHECK(r.per_point_sq_err.size() == 7);
    CHECK(r.per_point_sq_err.minCoeff() >= 0.0);
    CHECK(r.rho_defined);
    // degenerate reference flags the relative error as undefined
    const IseReport r0 = make_ise_report(model, truth, z, w, 0.0);
    CHECK(!r0.rho_defined);
  }
  SUBCASE("weighted estimate matches a direct loop") {
    Rng trng(11);
    RandomPolynomial::Config pc;
    pc.dim = 2;
    pc.target_terms = 6;
    pc.max_degree = 3;
    RandomPolynomial poly(pc, trng);
    const TruthFn truth = [&poly](ConstPointRef z) { return poly(z); };
    const Points z = random_points(2, 9, rng);
    Vector w(9);
    for (Index i = 0; i < 9; ++i) w[i] = rng.uniform01() - 0.3;
    double direct = 0.0;
    for (Index i = 0; i < 9; ++i) {
      const double e = truth(z.col(i)) - model.predict(z.col(i));
      direct += w[i] * e * e;
    }
    CHECK(ise_hat(model, truth, z, &w) == doctest::Approx(direct).epsilon(1e-13));
    CHECK(ise_hat(model, truth, z) >= 0.0);
  }
}

}  // TEST_SUITE
