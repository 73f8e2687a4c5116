#pragma once

#include <array>
#include <string>
#include <vector>

#include "herdval/common.hpp"

namespace herdval {

struct SobolDirectionRow {
  int dimension = 0;
  int degree = 0;
  std::uint32_t poly = 0;  // encoded middle coefficients of the primitive polynomial
  std::vector<std::uint32_t> m;
};

// Parses the widely used direction-number format: a header line, then one
// line per dimension with "d s a m_1 ... m_s".
std::vector<SobolDirectionRow> parse_direction_table(const std::string& text);

// Base-2 digital sequence; scrambled mode applies seeded nested uniform
// (Owen-style) digit scrambling per dimension. Points lie in [0,1); the
// unscrambled sequence starts at the all-zeros point.
class SobolStream {
 public:
  static constexpr int kMaxDim = 20;
  static constexpr int kBits = 32;

  SobolStream(int dim, std::uint64_t seed, bool scrambled = true);

  int dim() const { return dim_; }
  Index cursor() const { return cursor_; }

  Points take(Index count);
  void skip(Index count) { cursor_ += count; }
  // Same stream parameters positioned at an absolute offset.
  SobolStream clone_at(Index offset) const;

  static Points generate(int dim, Index count, std::uint64_t seed, bool scrambled = true);

 private:
  Vector point_at(Index i) const;

  int dim_;
  bool scrambled_;
  Index cursor_ = 0;
  std::vector<std::array<std::uint32_t, kBits>> dirs_;
  std::vector<std::uint64_t> keys_;
};

}  // namespace herdval
