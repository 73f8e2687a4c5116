#include "herdval/experiments.hpp"

#include <cmath>

#include "herdval/sobol.hpp"
#include "herdval/testbed.hpp"

namespace herdval {

namespace {

double auto_theta(Index n, int d) {
  return std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d));
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

Points with_factorial_probes(Points sobol_probes, int d) {
  const Points grid = factorial_grid3(d);
  Points out(d, sobol_probes.cols() + grid.cols());
  out << sobol_probes, grid;
  return out;
}

}  // namespace

CriteriaRow compute_criteria(std::string name, bool weighted, const DiscreteMeasure& zeta,
                             const Points& design, const Vector* design_weights,
                             const DiscreteMu& mu_bar, const ConditionalKernel& cond,
                             double imse_ref, const Points& probes) {
  CriteriaRow row;
  row.design = std::move(name);
  row.weighted = weighted;
  const MmdResult mmd = mmd_squared(zeta, mu_bar);
  row.delta_bar = std::sqrt(mmd.value);
  row.mmd_clamped = mmd.clamped;
  row.delta = std::abs(imse_hat(cond, design, design_weights) - imse_ref);
  const SpaceFillingReport sf = space_filling_report(design, probes);
  row.cr = sf.cr;
  row.pr = sf.pr;
  row.cr_renormalized = sf.cr_renormalized;
  row.pr_renormalized = sf.pr_renormalized;
  // mass carried by the reported design points (m/k for the exclusion variant)
  row.total_mass = design_weights != nullptr ? design_weights->sum() : 1.0;
  return row;
}

DeltaExperimentResult run_delta_experiment(const DeltaExperimentConfig& cfg) {
  const int d = cfg.d;
  const double theta = cfg.theta > 0.0 ? cfg.theta : auto_theta(cfg.n, d);

  const Points candidates = SobolStream::generate(d, cfg.q, sub_seed(cfg.seed, 1));
  auto kernel = make_matern32_isotropic(d, theta);
  auto mu_plain =
      std::make_shared<DiscreteMu>(kernel, DiscreteMeasure::uniform(candidates));

  HerdingConfig base;
  base.kernel = kernel;
  base.mu = mu_plain;
  base.candidates = candidates;
  base.count = cfg.n;
  const Points x_n = run_kh(base).design;

  auto kbar = make_validation(kernel, x_n);
  auto mu_bar = std::make_shared<DiscreteMu>(kbar, DiscreteMeasure::uniform(candidates));
  const ConditionalKernel& cond = kbar->conditional();

  const Points s_m = SobolStream::generate(d, cfg.m, sub_seed(cfg.seed, 2));

  HerdingConfig kh_cfg = base;
  kh_cfg.initial = x_n;
  kh_cfg.count = cfg.m;
  const Points z_kh = run_kh(kh_cfg).design;

  HerdingConfig excl_cfg;
  excl_cfg.kernel = kbar;
  excl_cfg.mu = mu_bar;
  excl_cfg.candidates = candidates;
  excl_cfg.count = cfg.m;
  excl_cfg.exclude = x_n;
  excl_cfg.distinct = true;
  const HerdingTrace excl = run_kh_exclude(excl_cfg);

  HerdingConfig mn2_cfg;
  mn2_cfg.kernel = kbar;
  mn2_cfg.mu = mu_bar;
  mn2_cfg.candidates = candidates;
  mn2_cfg.count = cfg.m;
  const HerdingTrace mn2 = run_mn2(mn2_cfg);

  const FreeWeights w_sobol = optimal_weights_free(s_m, *mu_bar);
  const FreeWeights w_kh = optimal_weights_free(z_kh, *mu_bar);

  const Points ref_pts = SobolStream::generate(d, cfg.q_ref, sub_seed(cfg.seed, 3));
  const double imse_ref = imse_hat(cond, ref_pts);
  const Points probes =
      with_factorial_probes(SobolStream::generate(d, cfg.q_ref, sub_seed(cfg.seed, 4)), d);

  DeltaExperimentResult out;
  out.x_n = x_n;
  out.imse_ref = imse_ref;

  out.rows.push_back(compute_criteria("sobol", false, DiscreteMeasure::uniform(s_m), s_m,
                                      nullptr, *mu_bar, cond, imse_ref, probes));
  out.rows.push_back(compute_criteria("sobol", true, DiscreteMeasure{s_m, w_sobol.weights},
                                      s_m, &w_sobol.weights, *mu_bar, cond, imse_ref, probes));
  out.rows.push_back(compute_criteria("kh", false, DiscreteMeasure::uniform(z_kh), z_kh,
                                      nullptr, *mu_bar, cond, imse_ref, probes));
  out.rows.push_back(compute_criteria("kh", true, DiscreteMeasure{z_kh, w_kh.weights}, z_kh,
                                      &w_kh.weights, *mu_bar, cond, imse_ref, probes));
  out.rows.push_back(compute_criteria("kh-exclude", false, excl.final_measure, excl.design,
                                      &excl.design_weights, *mu_bar, cond, imse_ref, probes));
  const Vector w_mn2 = mn2.weights.back();
  out.rows.push_back(compute_criteria("mn2", true, DiscreteMeasure{mn2.design, w_mn2},
                                      mn2.design, &w_mn2, *mu_bar, cond, imse_ref, probes));
  return out;
}

IseExperimentResult run_ise_experiment(const IseExperimentConfig& cfg) {
  IseExperimentResult out;
  for (int d : cfg.dims) {
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      const std::uint64_t rs =
          sub_seed(cfg.seed, 0xd1000000ull + 1000003ull * static_cast<std::uint64_t>(d) +
                                 static_cast<std::uint64_t>(rep));
      try {
        SobolStream designs(d, sub_seed(rs, 1));
        const Points x_n = designs.take(cfg.n);
        const Points s_m = designs.take(cfg.m);  // the next m points of the sequence
        const Points candidates = SobolStream::generate(d, cfg.q, sub_seed(rs, 2));
        Rng rand_rng(sub_seed(rs, 3));
        const Points r_m = uniform_random(d, cfg.m, rand_rng);
        Rng truth_rng(sub_seed(rs, 4));
        RandomPolynomial::Config pc;
        pc.dim = d;
        pc.target_terms = cfg.n / 2;
        RandomPolynomial poly(pc, truth_rng);
        const TruthFn truth = [&poly](ConstPointRef x) { return poly(x); };

        const Vector y = poly.eval_many(x_n);
        const double theta0 = auto_theta(cfg.n, d);
        const KernelFactory factory = [d](double theta) -> std::shared_ptr<const Kernel> {
          return make_matern32_product(d, theta);
        };
        const ThetaFit fit = fit_theta_loo(x_n, y, factory, 0.1 * theta0, 10.0 * theta0);
        GpModel model(factory(fit.theta), x_n, y);

        const Points ref_pts = SobolStream::generate(d, cfg.q_ref, sub_seed(rs, 5));
        const double ise_ref = ise_reference(model, truth, ref_pts);

        // space-filling kernel with the fixed bandwidth, closed-form mu
        auto k0 = make_matern32_product(d, theta0);
        auto mu0 = std::make_shared<UniformProductMu>(k0);
        HerdingConfig kh_cfg;
        kh_cfg.kernel = k0;
        kh_cfg.mu = mu0;
        kh_cfg.candidates = candidates;
        kh_cfg.initial = x_n;
        kh_cfg.count = cfg.m;
        const Points z_m = run_kh(kh_cfg).design;

        auto kbar = make_validation(k0, x_n);
        UniformValidationMu mu_bar(kbar);

        auto push = [&](const std::string& method, bool weighted, double ise_value,
                        double rho, bool rho_defined) {
          IseRow row;
          row.d = d;
          row.replicate = rep;
          row.method = method;
          row.weighted = weighted;
          row.ise_ref = ise_ref;
          row.ise_hat = ise_value;
          row.rho_defined = rho_defined;
          row.rho = rho;
          out.rows.push_back(std::move(row));
        };

        const struct {
          const char* name;
          const Points& pts;
        } designs_list[] = {{"sobol", s_m}, {"kh", z_m}, {"random", r_m}};
        for (const auto& dsg : designs_list) {
          const FreeWeights w = optimal_weights_free(dsg.pts, mu_bar);
          const IseReport rep_ise = make_ise_report(model, truth, dsg.pts, w.weights, ise_ref);
          push(dsg.name, false, rep_ise.ise_unweighted, rep_ise.rho_unweighted,
               rep_ise.rho_defined);
          push(dsg.name, true, rep_ise.ise_weighted, rep_ise.rho_weighted,
               rep_ise.rho_defined);
        }
        push("loo", false, fit.loo, ise_ref > 0.0 ? (fit.loo - ise_ref) / ise_ref : 0.0,
             ise_ref > 0.0);
      } catch (const std::exception& e) {
        ++out.failures;
        out.failure_log.push_back("d=" + std::to_string(d) + " rep=" + std::to_string(rep) +
                                  ": " + e.what());
      }
    }
  }

  // aggregate mean |rho| and mean rho per (d, method, weighted)
  for (int d : cfg.dims) {
    for (const char* method : {"sobol", "kh", "random", "loo"}) {
      for (bool weighted : {false, true}) {
        if (std::string(method) == "loo" && weighted) continue;
        IseAggregate agg;
        agg.d = d;
        agg.method = method;
        agg.weighted = weighted;
        for (const IseRow& row : out.rows) {
          if (row.d != d || row.method != method || row.weighted != weighted ||
              !row.rho_defined) {
            continue;
          }
          agg.mean_abs_rho += std::abs(row.rho);
          agg.mean_rho += row.rho;
          ++agg.count;
        }
        if (agg.count > 0) {
          agg.mean_abs_rho /= agg.count;
          agg.mean_rho /= agg.count;
          out.aggregates.push_back(agg);
        }
      }
    }
  }
  return out;
}

Theorem1Result run_theorem1_check(Index n, Index k, double theta, Index q,
                                  std::uint64_t seed) {
  const int d = 1;
  const Points candidates = SobolStream::generate(d, q, sub_seed(seed, 1));
  auto kernel = make_matern32_univariate(theta);
  auto mu_plain =
      std::make_shared<DiscreteMu>(kernel, DiscreteMeasure::uniform(candidates));

  HerdingConfig xn_cfg;
  xn_cfg.kernel = kernel;
  xn_cfg.mu = mu_plain;
  xn_cfg.candidates = candidates;
  xn_cfg.count = n;
  const Points x_n = run_kh(xn_cfg).design;

  HerdingConfig direct;
  direct.kernel = kernel;
  direct.mu = mu_plain;
  direct.candidates = candidates;
  direct.initial = x_n;
  direct.variant = HerdingVariant::mn2;
  direct.count = k;
  const HerdingTrace t_direct = run_mn2(direct);

  auto cond = make_conditional(kernel, x_n);
  auto mu_cond = std::make_shared<DiscreteMu>(cond, DiscreteMeasure::uniform(candidates));
  HerdingConfig via_cond;
  via_cond.kernel = cond;
  via_cond.mu = mu_cond;
  via_cond.candidates = candidates;
  via_cond.variant = HerdingVariant::mn2;
  via_cond.count = k;
  const HerdingTrace t_cond = run_mn2(via_cond);

  Theorem1Result out;
  out.seq_direct = t_direct.selected_indices;
  out.seq_cond = t_cond.selected_indices;
  out.equal = out.seq_direct == out.seq_cond;
  out.x_n = x_n;
  return out;
}

}  // namespace herdval
