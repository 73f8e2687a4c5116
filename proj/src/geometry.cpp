#include "herdval/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace herdval {

double packing_radius(const Points& design) {
  const Index s = design.cols();
  if (s < 2) throw std::invalid_argument("packing_radius: need at least two points");
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < s; ++i) {
    for (Index j = i + 1; j < s; ++j) {
      best = std::min(best, (design.col(i) - design.col(j)).squaredNorm());
    }
  }
  return 0.5 * std::sqrt(best);
}

double covering_radius_approx(const Points& design, const Points& probes) {
  if (design.cols() == 0) throw std::invalid_argument("covering_radius_approx: empty design");
  if (probes.cols() == 0) throw std::invalid_argument("covering_radius_approx: empty probe set");
  double max_sq = 0.0;
  for (Index p = 0; p < probes.cols(); ++p) {
    double min_sq = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < design.cols(); ++i) {
      const double d2 = (probes.col(p) - design.col(i)).squaredNorm();
      if (d2 < min_sq) {
        min_sq = d2;
        if (min_sq <= max_sq) break;  // this probe cannot raise the maximum
      }
    }
    if (min_sq > max_sq) max_sq = min_sq;
  }
  return std::sqrt(max_sq);
}

Points factorial_grid3(int dim) {
  if (dim < 1) throw std::invalid_argument("factorial_grid3: dim must be >= 1");
  Index count = 1;
  for (int i = 0; i < dim; ++i) count *= 3;
  Points out(dim, count);
  for (Index j = 0; j < count; ++j) {
    Index rem = j;
    for (int i = 0; i < dim; ++i) {
      out(i, j) = 0.5 * static_cast<double>(rem % 3);
      rem /= 3;
    }
  }
  return out;
}

SpaceFillingReport space_filling_report(const Points& design, const Points& probes) {
  SpaceFillingReport r;
  r.cr = covering_radius_approx(design, probes);
  r.pr = design.cols() >= 2 ? packing_radius(design) : 0.0;
  const double scale =
      std::pow(static_cast<double>(design.cols()), 1.0 / static_cast<double>(design.rows()));
  r.cr_renormalized = scale * r.cr;
  r.pr_renormalized = scale * r.pr;
  r.probes_used = probes.cols();
  return r;
}

}  // namespace herdval
