#pragma once

#include "herdval/measures.hpp"

namespace herdval {

enum class HerdingVariant { kh, mn, mn2, kh_exclude };

struct HerdingConfig {
  std::shared_ptr<const Kernel> kernel;
  std::shared_ptr<const Mu> mu;     // must be bound to the same kernel
  Points candidates;                // d x Q search set
  Points initial;                   // starting design, may be empty
  HerdingVariant variant = HerdingVariant::kh;
  Index count = 0;                  // selections to make; target m for kh_exclude
  Points exclude;                   // design whose points are not counted (kh_exclude)
  bool distinct = false;            // kh_exclude: require pairwise-distinct points
  double tie_tol = 1e-12;           // argmin slack; lowest candidate index wins
  Index max_iterations = -1;        // kh_exclude cap, default 50 * count
  std::size_t memory_cap = std::size_t{2} << 30;  // bytes for the Q x k table
};

struct SelectionEvent {
  Index iteration;
  Index candidate;
  bool in_exclude = false;
  bool duplicate = false;
};

struct HerdingTrace {
  Points selected;                 // every selection, in order
  std::vector<Index> selected_indices;  // candidate index per selection
  Points design;                   // returned design (counted points for kh_exclude)
  Vector design_weights;           // kh_exclude: per design point, mass under 1/k weighting
  std::vector<double> mmd2;        // squared MMD after each iteration
  std::vector<Vector> weights;     // per-iteration weights on the support (mn/mn2)
  std::vector<double> total_mass;  // per-iteration total mass of the running measure
  std::vector<SelectionEvent> events;
  DiscreteMeasure final_measure;
  Index iterations = 0;
};

struct IterationCapError : std::runtime_error {
  IterationCapError(const std::string& msg, HerdingTrace partial_trace)
      : std::runtime_error(msg), partial(std::move(partial_trace)) {}
  HerdingTrace partial;
};

// Lowest index whose score lies within tie_tol of the minimum.
Index argmin_with_ties(const Vector& scores, double tie_tol);

HerdingTrace run_kh(const HerdingConfig& cfg);
HerdingTrace run_kh_exclude(const HerdingConfig& cfg);
HerdingTrace run_mn(const HerdingConfig& cfg);
HerdingTrace run_mn2(const HerdingConfig& cfg);
HerdingTrace run_herding(const HerdingConfig& cfg);

}  // namespace herdval
