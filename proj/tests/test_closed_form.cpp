#include <doctest.h>

#include "herdval/closed_form.hpp"
#include "herdval/sobol.hpp"
#include "oracles.hpp"

using namespace herdval;

namespace {

double kfun(double rate, double a, double b) { return matern32_rate(rate, a - b); }

double quad_potential(double rate, double x) {
  return oracles::integrate01([&](double t) { return kfun(rate, x, t); }, {x});
}

double quad_potential_sq(double rate, double x) {
  return oracles::integrate01(
      [&](double t) {
        const double k = kfun(rate, x, t);
        return k * k;
      },
      {x});
}

double quad_energy(double rate) {
  return oracles::integrate01_2d(
      [&](double t, double s) { return kfun(rate, t, s); }, {},
      [](double t) { return std::vector<double>{t}; }, 1e-11);
}

double quad_energy_sq(double rate) {
  return oracles::integrate01_2d(
      [&](double t, double s) {
        const double k = kfun(rate, t, s);
        return k * k;
      },
      {}, [](double t) { return std::vector<double>{t}; }, 1e-11);
}

double quad_beta(double rate, double u, double v) {
  return oracles::integrate01([&](double t) { return kfun(rate, u, t) * kfun(rate, v, t); },
                              {u, v});
}

double quad_gamma(double rate, double u, double v) {
  return oracles::integrate01_2d(
      [&](double t, double s) { return kfun(rate, u, t) * kfun(rate, v, s) * kfun(rate, t, s); },
      {u, v}, [&](double t) { return std::vector<double>{v, t}; }, 1e-11);
}

Points random_points(int d, Index count, Rng& rng) {
  Points p(d, count);
  for (Index j = 0; j < count; ++j) {
    for (int i = 0; i < d; ++i) p(i, j) = rng.uniform01();
  }
  return p;
}

}  // namespace

TEST_SUITE("closed_form") {

TEST_CASE("potential against quadrature and symmetry") {
  CHECK(cf::potential_uniform_1d(10.0, 0.5) ==
        doctest::Approx(quad_potential(10.0, 0.5)).epsilon(1e-10));
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const double rate = 1.0 + 29.0 * rng.uniform01();
    const double x = rng.uniform01();
    CHECK(cf::potential_uniform_1d(rate, x) ==
          doctest::Approx(cf::potential_uniform_1d(rate, 1.0 - x)).epsilon(1e-14));
  }
  // s_term(0) = 0, so the potential at 0 is s_term(1)
  CHECK(cf::potential_uniform_1d(7.0, 0.0) == doctest::Approx(cf::s_term(7.0, 1.0)));
  CHECK_THROWS_AS(cf::potential_uniform_1d(7.0, 1.5), std::domain_error);
  CHECK_THROWS_AS(cf::potential_uniform_1d(-1.0, 0.5), std::invalid_argument);
}

TEST_CASE("energy against quadrature and limits") {
  CHECK(cf::energy_uniform_1d(10.0) == doctest::Approx(quad_energy(10.0)).epsilon(1e-8));
  // Fubini: energy equals the integral of the potential
  const double via_potential =
      oracles::integrate01([](double x) { return cf::potential_uniform_1d(10.0, x); }, {});
  CHECK(cf::energy_uniform_1d(10.0) == doctest::Approx(via_potential).epsilon(1e-9));
  // rate -> 0: kernel tends to the constant 1
  CHECK(cf::energy_uniform_1d(1e-4) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("squared-kernel potential and energy") {
  const Vector grid = Vector::LinSpaced(9, 0.1, 0.9);
  double best = -1.0;
  Index best_i = -1;
  for (Index i = 0; i < grid.size(); ++i) {
    const double v = cf::potential_sq_uniform_1d(8.0, grid[i]);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  CHECK(grid[best_i] == doctest::Approx(0.5));  // symmetric maximum at the center

  const double cases[][2] = {{5.0, 0.25}, {10.0, 0.5}, {20.0, 0.9}};
  for (const auto& c : cases) {
    CHECK(cf::potential_sq_uniform_1d(c[0], c[1]) ==
          doctest::Approx(quad_potential_sq(c[0], c[1])).epsilon(1e-8));
  }
  CHECK(cf::energy_sq_uniform_1d(10.0) == doctest::Approx(quad_energy_sq(10.0)).epsilon(1e-8));
  const double via_potential =
      oracles::integrate01([](double x) { return cf::potential_sq_uniform_1d(10.0, x); }, {});
  CHECK(cf::energy_sq_uniform_1d(10.0) == doctest::Approx(via_potential).epsilon(1e-9));
}

TEST_CASE("beta identities") {
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const double rate = 1.0 + 29.0 * rng.uniform01();
    const double u = rng.uniform01(), v = rng.uniform01();
    CHECK(cf::beta_1d(rate, u, v) == doctest::Approx(cf::beta_1d(rate, v, u)).epsilon(1e-13));
    CHECK(cf::beta_1d(rate, u, u) ==
          doctest::Approx(cf::potential_sq_uniform_1d(rate, u)).epsilon(1e-12));
  }
  CHECK(cf::beta_1d(10.0, 0.2, 0.7) == doctest::Approx(quad_beta(10.0, 0.2, 0.7)).epsilon(1e-8));
}

TEST_CASE("gamma identities") {
  Rng rng(3);
  for (int i = 0; i < 6; ++i) {
    const double rate = 1.0 + 29.0 * rng.uniform01();
    const double u = rng.uniform01(), v = rng.uniform01();
    CHECK(cf::gamma_1d(rate, u, v) == doctest::Approx(cf::gamma_1d(rate, v, u)).epsilon(1e-12));
    CHECK(cf::gamma_1d(rate, u, v) ==
          doctest::Approx(cf::gamma_1d(rate, 1.0 - u, 1.0 - v)).epsilon(1e-12));
  }
  CHECK(cf::gamma_1d(10.0, 0.3, 0.6) ==
        doctest::Approx(quad_gamma(10.0, 0.3, 0.6)).epsilon(1e-7));
}

TEST_CASE("all univariate forms match quadrature on random inputs") {
  Rng rng(4);
  for (int i = 0; i < 8; ++i) {
    const double rate = 1.0 + 29.0 * rng.uniform01();
    const double u = rng.uniform01(), v = rng.uniform01();
    CHECK(std::abs(cf::potential_uniform_1d(rate, u) - quad_potential(rate, u)) <= 1e-7);
    CHECK(std::abs(cf::energy_uniform_1d(rate) - quad_energy(rate)) <= 1e-7);
    CHECK(std::abs(cf::potential_sq_uniform_1d(rate, u) - quad_potential_sq(rate, u)) <= 1e-7);
    CHECK(std::abs(cf::energy_sq_uniform_1d(rate) - quad_energy_sq(rate)) <= 1e-7);
    CHECK(std::abs(cf::beta_1d(rate, u, v) - quad_beta(rate, u, v)) <= 1e-7);
    CHECK(std::abs(cf::gamma_1d(rate, u, v) - quad_gamma(rate, u, v)) <= 1e-7);
  }
}

TEST_CASE("mu cache matrices") {
  const double theta = 3.0;
  SUBCASE("single point") {
    Points xn(1, 1);
    xn << 0.37;
    const ProductMatern32 k(1, theta);
    const SeparableMuCache cache(k, xn);
    const double rate = k.rates()[0];
    CHECK(cache.omega()(0, 0) == doctest::Approx(cf::beta_1d(rate, 0.37, 0.37)));
    CHECK(cache.gamma_matrix()(0, 0) == doctest::Approx(cf::gamma_1d(rate, 0.37, 0.37)));
  }
  SUBCASE("symmetry in d=3") {
    Rng rng(5);
    const Points xn = random_points(3, 5, rng);
    const ProductMatern32 k(3, theta);
    const SeparableMuCache cache(k, xn);
    CHECK((cache.omega() - cache.omega().transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((cache.gamma_matrix() - cache.gamma_matrix().transpose()).cwiseAbs().maxCoeff() ==
          0.0);
  }
  SUBCASE("entries match Monte Carlo") {
    Rng rng(6);
    const Points xn = random_points(2, 3, rng);
    const ProductMatern32 kp(2, theta);
    const SeparableMuCache cache(kp, xn);
    const int ns = 1'000'000;
    // Omega entry (0,1): E_t[ K(x_0,t) K(x_1,t) ] with t uniform on the square
    {
      double sum = 0.0, sumsq = 0.0;
      for (int s = 0; s < ns; ++s) {
        Vector t(2);
        t << rng.uniform01(), rng.uniform01();
        const double v = kp(xn.col(0), t) * kp(xn.col(1), t);
        sum += v;
        sumsq += v * v;
      }
      const double mean = sum / ns;
      const double se = std::sqrt((sumsq / ns - mean * mean) / ns);
      CHECK(std::abs(cache.omega()(0, 1) - mean) <= 3.0 * se);
    }
    // Gamma entry (0,1): E_{t,s}[ K(x_0,t) K(x_1,s) K(t,s) ]
    {
      double sum = 0.0, sumsq = 0.0;
      for (int s = 0; s < ns; ++s) {
        Vector t(2), u(2);
        t << rng.uniform01(), rng.uniform01();
        u << rng.uniform01(), rng.uniform01();
        const double v = kp(xn.col(0), t) * kp(xn.col(1), u) * kp(t, u);
        sum += v;
        sumsq += v * v;
      }
      const double mean = sum / ns;
      const double se = std::sqrt((sumsq / ns - mean * mean) / ns);
      CHECK(std::abs(cache.gamma_matrix()(0, 1) - mean) <= 3.0 * se);
    }
  }
}

TEST_CASE("validation potential degenerate and discrete oracle") {
  const double theta = 2.0;
  SUBCASE("empty design") {
    const ProductMatern32 k(2, theta);
    const SeparableMuCache cache(k, Points(2, 0));
    Vector x(2);
    x << 0.3, 0.8;
    CHECK(cache.potential_validation(x) ==
          doctest::Approx(2.0 * cache.potential_sq(x) + 1.0).epsilon(1e-14));
    CHECK(cache.energy_validation() ==
          doctest::Approx(2.0 * cache.energy_sq() + 1.0).epsilon(1e-14));
  }
  SUBCASE("discrete mu oracle, d=2 n=5") {
    Rng rng(7);
    const Points xn = random_points(2, 5, rng);
    auto kp = make_matern32_product(2, theta);
    const SeparableMuCache cache(*kp, xn);
    auto kbar = make_validation(kp, xn);
    const Points mu_pts = SobolStream::generate(2, Index{1} << 14, 99);
    auto bound = kbar->bind(mu_pts);
    Vector row(mu_pts.cols());
    for (int t = 0; t < 8; ++t) {
      const Vector x = random_points(2, 1, rng).col(0);
      bound->row(x, row);
      const double oracle = row.mean();
      const double closed = cache.potential_validation(x);
      CHECK(closed == doctest::Approx(oracle).epsilon(5e-3));
    }
    // and at a design point, where the conditional variance vanishes
    bound->row(xn.col(2), row);
    CHECK(cache.potential_validation(xn.col(2)) == doctest::Approx(row.mean()).epsilon(5e-3));
  }
}

TEST_CASE("validation energy matches discrete oracle; gamma-squared variant does not") {
  Rng rng(8);
  Points xn = random_points(1, 2, rng);
  auto kp = make_matern32_product(1, 10.0 / std::sqrt(3.0));  // rate 10
  const SeparableMuCache cache(*kp, xn);
  auto kbar = make_validation(kp, xn);

  const Points mu_pts = SobolStream::generate(1, Index{1} << 12, 17);
  DiscreteMu mu(kbar, DiscreteMeasure::uniform(mu_pts));
  const double oracle = mu.energy();
  CHECK(cache.energy_validation() == doctest::Approx(oracle).epsilon(5e-3));

  // The same assembly with the trace of (K_n^{-1} Gamma)^2 in place of
  // (K_n^{-1} Omega)^2 disagrees with the oracle (and can go negative).
  const Matrix kg = cache.factor().solve(cache.gamma_matrix());
  const double tr_gamma_sq = (kg.array() * kg.transpose().array()).sum();
  const double one_minus = 1.0 - cache.trace_kninv_omega();
  const double printed_variant = 2.0 * cache.energy_sq() - 4.0 * cache.trace_kninv_gamma() +
                                 2.0 * tr_gamma_sq + one_minus * one_minus;
  CHECK(std::abs(printed_variant - oracle) > 100.0 * std::abs(cache.energy_validation() - oracle));
}

TEST_CASE("validation energy nonnegative over random instances") {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + static_cast<int>(rng.uniform01() * 3.0);
    const Index n = 1 + static_cast<Index>(rng.uniform01() * 20.0);
    const double theta = 0.5 + 5.0 * rng.uniform01();
    const Points xn = random_points(d, n, rng);
    const ProductMatern32 k(d, theta);
    const SeparableMuCache cache(k, xn);
    CHECK(cache.energy_validation() >= 0.0);
  }
}

TEST_CASE("separable product energy identity") {
  const ProductMatern32 k(2, 4.0);
  const SeparableMuCache cache(k, Points(2, 0));
  const double e1 = cf::energy_uniform_1d(k.rates()[0]);
  const double e2 = cf::energy_uniform_1d(k.rates()[1]);
  CHECK(cache.energy_plain() == doctest::Approx(e1 * e2).epsilon(1e-12));
}

TEST_CASE("closed-form mu wrappers agree with discrete mu") {
  Rng rng(10);
  const Points xn = random_points(2, 6, rng);
  auto kp = make_matern32_product(2, 3.0);

  UniformProductMu mu_plain(kp);
  auto kbar = make_validation(kp, xn);
  UniformValidationMu mu_bar(kbar);

  const Points mu_pts = SobolStream::generate(2, Index{1} << 14, 123);
  DiscreteMu dm_plain(kp, DiscreteMeasure::uniform(mu_pts));
  DiscreteMu dm_bar(kbar, DiscreteMeasure::uniform(mu_pts));

  for (int t = 0; t < 5; ++t) {
    const Vector x = random_points(2, 1, rng).col(0);
    CHECK(mu_plain.potential(x) == doctest::Approx(dm_plain.potential(x)).epsilon(5e-3));
    CHECK(mu_bar.potential(x) == doctest::Approx(dm_bar.potential(x)).epsilon(5e-3));
  }
  CHECK(mu_plain.energy() == doctest::Approx(dm_plain.energy()).epsilon(5e-3));
  CHECK(mu_bar.energy() == doctest::Approx(dm_bar.energy()).epsilon(5e-3));

  // closed forms require a separable base
  auto iso = make_matern32_isotropic(2, 3.0);
  CHECK_THROWS_AS(UniformValidationMu(make_validation(iso, xn)), std::invalid_argument);
}

}  // TEST_SUITE
