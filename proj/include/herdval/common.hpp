#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace herdval {

// Points are stored one per column: a design with n points in [0,1]^d is a
// d x n matrix.
using Points = Eigen::MatrixXd;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using ConstPointRef = Eigen::Ref<const Eigen::VectorXd>;

struct FactorizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WeightSolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based generator with explicit uniform/normal draws, so seeded runs
// reproduce bit-for-bit independently of the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_++); }

  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Box-Muller, two uniforms per draw.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Independent substream, usable in any order relative to the parent.
  Rng fork(std::uint64_t stream) const {
    return Rng(splitmix64(state_ ^ splitmix64(stream ^ 0xa5a5a5a5deadbeefull)));
  }

 private:
  std::uint64_t state_;
};

}  // namespace herdval
