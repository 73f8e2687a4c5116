#include "herdval/sobol.hpp"

#include <mutex>
#include <sstream>

#include "herdval/sobol_table.hpp"

namespace herdval {

std::vector<SobolDirectionRow> parse_direction_table(const std::string& text) {
  std::vector<SobolDirectionRow> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    SobolDirectionRow row;
    if (!(ls >> row.dimension)) continue;  // header or junk line
    if (!(ls >> row.degree >> row.poly)) {
      throw std::runtime_error("direction-number table: malformed line: " + line);
    }
    row.m.resize(row.degree);
    for (int i = 0; i < row.degree; ++i) {
      if (!(ls >> row.m[i])) {
        throw std::runtime_error("direction-number table: missing m values: " + line);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

const std::vector<SobolDirectionRow>& builtin_table() {
  static const std::vector<SobolDirectionRow> rows =
      parse_direction_table(detail::kSobolDirectionTable);
  return rows;
}

std::array<std::uint32_t, SobolStream::kBits> expand_directions(const SobolDirectionRow& row) {
  constexpr int nbits = SobolStream::kBits;
  std::array<std::uint32_t, nbits> m{};
  const int s = row.degree;
  for (int k = 0; k < s; ++k) m[k] = row.m[static_cast<std::size_t>(k)];
  for (int k = s; k < nbits; ++k) {
    std::uint32_t v = m[k - s] ^ (m[k - s] << s);
    for (int t = 1; t < s; ++t) {
      if ((row.poly >> (s - 1 - t)) & 1u) v ^= m[k - t] << t;
    }
    m[k] = v;
  }
  std::array<std::uint32_t, nbits> dirs{};
  for (int k = 0; k < nbits; ++k) dirs[k] = m[k] << (nbits - 1 - k);
  return dirs;
}

// Nested uniform scrambling: the flip of each digit is a hash of the tree
// node reached by the preceding digits.
std::uint32_t owen_scramble(std::uint32_t v, std::uint64_t key) {
  constexpr int nbits = SobolStream::kBits;
  std::uint32_t out = 0;
  for (int t = 0; t < nbits; ++t) {
    const std::uint32_t prefix = t == 0 ? 0u : (v >> (nbits - t));
    const std::uint64_t node = (std::uint64_t{1} << t) | prefix;
    const std::uint32_t bit = (v >> (nbits - 1 - t)) & 1u;
    const std::uint32_t flip =
        static_cast<std::uint32_t>(splitmix64(key ^ (node * 0x9e3779b97f4a7c15ull)) & 1u);
    out |= (bit ^ flip) << (nbits - 1 - t);
  }
  return out;
}

}  // namespace

SobolStream::SobolStream(int dim, std::uint64_t seed, bool scrambled)
    : dim_(dim), scrambled_(scrambled) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("SobolStream: dimension must be in 1.." +
                                std::to_string(kMaxDim));
  }
  dirs_.resize(static_cast<std::size_t>(dim));
  keys_.resize(static_cast<std::size_t>(dim));
  // first coordinate: van der Corput in base 2 (all m = 1)
  for (int k = 0; k < kBits; ++k) dirs_[0][static_cast<std::size_t>(k)] = 1u << (kBits - 1 - k);
  const auto& table = builtin_table();
  for (int d = 2; d <= dim; ++d) {
    const auto& row = table[static_cast<std::size_t>(d - 2)];
    if (row.dimension != d) throw std::runtime_error("SobolStream: direction table out of order");
    dirs_[static_cast<std::size_t>(d - 1)] = expand_directions(row);
  }
  for (int d = 0; d < dim; ++d) {
    keys_[static_cast<std::size_t>(d)] =
        splitmix64(seed ^ splitmix64(0x5b1ce301u + 0x9e37u * static_cast<std::uint64_t>(d)));
  }
}

Vector SobolStream::point_at(Index i) const {
  Vector x(dim_);
  for (int d = 0; d < dim_; ++d) {
    std::uint32_t v = 0;
    std::uint64_t bits = static_cast<std::uint64_t>(i);
    int b = 0;
    while (bits != 0) {
      if (bits & 1ull) v ^= dirs_[static_cast<std::size_t>(d)][static_cast<std::size_t>(b)];
      bits >>= 1;
      ++b;
    }
    if (scrambled_) v = owen_scramble(v, keys_[static_cast<std::size_t>(d)]);
    x[d] = static_cast<double>(v) * 0x1.0p-32;
  }
  return x;
}

Points SobolStream::take(Index count) {
  if (count < 0) throw std::invalid_argument("SobolStream::take: negative count");
  Points out(dim_, count);
  for (Index i = 0; i < count; ++i) out.col(i) = point_at(cursor_ + i);
  cursor_ += count;
  return out;
}

SobolStream SobolStream::clone_at(Index offset) const {
  SobolStream s = *this;
  s.cursor_ = offset;
  return s;
}

Points SobolStream::generate(int dim, Index count, std::uint64_t seed, bool scrambled) {
  SobolStream s(dim, seed, scrambled);
  return s.take(count);
}

}  // namespace herdval
