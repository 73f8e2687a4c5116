#pragma once

#include <vector>

#include "herdval/common.hpp"

namespace herdval {

Points uniform_random(int dim, Index count, Rng& rng);

// Legendre polynomials shifted to [0,1] and orthonormal there; evaluation
// extends polynomially outside the interval. Degrees 0..12 supported.
double legendre01(int degree, double x);

struct IndexSet {
  Eigen::MatrixXi indices;  // one multi-index per row (M x d)
  Vector variances;         // product of lambda over the entries, per row
  Index size() const { return indices.rows(); }
};

// Multi-indices with per-coordinate degree <= max_degree and total degree
// <= max_total_degree, ordered by decreasing variance, truncated at the first
// strict drop at or after `target` entries (tied blocks are kept whole).
IndexSet build_index_set(int dim, Index target, int max_degree, int max_total_degree,
                         const std::vector<double>& lambda);

// Uniformly distributed rotation, built from a random 2x2 block and
// Householder reflections.
Matrix random_rotation(int dim, Rng& rng);

// Random multivariate polynomial in the orthonormal Legendre basis, with a
// random linear pre-transform of the argument.
class RandomPolynomial {
 public:
  struct Config {
    int dim = 2;
    Index target_terms = 50;
    int max_degree = 7;
    int max_total_degree = 25;
    double alpha = 0.5;  // blend between a random rotation and the identity
  };

  RandomPolynomial(const Config& cfg, Rng& rng);

  double operator()(ConstPointRef x) const;
  Vector eval_many(const Points& pts) const;

  const Matrix& transform() const { return q_; }
  double tau() const { return tau_; }
  const IndexSet& index_set() const { return set_; }
  const Vector& coefficients() const { return beta_; }

 private:
  Config cfg_;
  Matrix q_;
  double tau_ = 1.0;
  IndexSet set_;
  Vector beta_;
};

}  // namespace herdval
