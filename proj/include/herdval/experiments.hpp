#pragma once

#include <string>
#include <vector>

#include "herdval/closed_form.hpp"
#include "herdval/geometry.hpp"
#include "herdval/gp.hpp"
#include "herdval/herding.hpp"

namespace herdval {

struct CriteriaRow {
  std::string design;
  bool weighted = false;
  double delta_bar = 0.0;  // E^{1/2}_{Kbar|n}(zeta - mu_Q)
  double delta = 0.0;      // |IMSE-hat - IMSE reference|
  double cr = 0.0;
  double pr = 0.0;
  double cr_renormalized = 0.0;
  double pr_renormalized = 0.0;
  double total_mass = 1.0;
  bool mmd_clamped = false;
};

CriteriaRow compute_criteria(std::string name, bool weighted, const DiscreteMeasure& zeta,
                             const Points& design, const Vector* design_weights,
                             const DiscreteMu& mu_bar, const ConditionalKernel& cond,
                             double imse_ref, const Points& probes);

// Space-filling and criterion comparison of validation designs around one
// herded prediction design (isotropic kernel, discrete mu_Q).
struct DeltaExperimentConfig {
  int d = 2;
  Index n = 50;
  Index m = 50;
  Index q = 4096;
  Index q_ref = Index{1} << 16;  // IMSE reference points and CR probes
  std::uint64_t seed = 0;
  double theta = 0.0;  // 0 picks n^{1/d}
};

struct DeltaExperimentResult {
  std::vector<CriteriaRow> rows;
  Points x_n;
  double imse_ref = 0.0;
};

DeltaExperimentResult run_delta_experiment(const DeltaExperimentConfig& cfg);

// Relative error of ISE estimation with random polynomial truths
// (separable kernel, closed-form mu).
struct IseExperimentConfig {
  std::vector<int> dims = {2, 3};
  Index n = 100;
  Index m = 50;
  Index q = 4096;
  Index q_ref = Index{1} << 16;
  int replicates = 20;
  std::uint64_t seed = 0;
};

struct IseRow {
  int d = 0;
  int replicate = 0;
  std::string method;  // sobol, kh, random, loo
  bool weighted = false;
  double ise_ref = 0.0;
  double ise_hat = 0.0;
  double rho = 0.0;
  bool rho_defined = true;
};

struct IseAggregate {
  int d = 0;
  std::string method;
  bool weighted = false;
  double mean_abs_rho = 0.0;
  double mean_rho = 0.0;
  int count = 0;
};

struct IseExperimentResult {
  std::vector<IseRow> rows;
  std::vector<IseAggregate> aggregates;
  int failures = 0;
  std::vector<std::string> failure_log;  // "d=.. rep=..: what"
};

IseExperimentResult run_ise_experiment(const IseExperimentConfig& cfg);

// The two minimum-norm pathways that must pick identical sequences.
struct Theorem1Result {
  std::vector<Index> seq_direct;  // candidate indices from MN2(X_n, K, k)
  std::vector<Index> seq_cond;    // candidate indices from MN2(empty, K|n, k)
  bool equal = false;
  Points x_n;
};

Theorem1Result run_theorem1_check(Index n, Index k, double theta, Index q, std::uint64_t seed);

}  // namespace herdval
