#pragma once

#include "herdval/common.hpp"

namespace herdval {

// Half the minimum pairwise Euclidean distance; needs at least two points.
double packing_radius(const Points& design);

// Largest probe to nearest-design-point distance. A finite probe set
// under-approximates the true covering radius.
double covering_radius_approx(const Points& design, const Points& probes);

// Full factorial grid on {0, 1/2, 1}^d.
Points factorial_grid3(int dim);

struct SpaceFillingReport {
  double cr = 0.0;
  double pr = 0.0;
  double cr_renormalized = 0.0;  // s^{1/d} * CR
  double pr_renormalized = 0.0;
  Index probes_used = 0;
};

SpaceFillingReport space_filling_report(const Points& design, const Points& probes);

}  // namespace herdval
