#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "herdval/common.hpp"

namespace herdval {

// CSV files carry a version comment line, then a header row. Values are
// written with 17 significant digits so reruns are byte-identical.
inline constexpr int kCsvVersion = 1;

std::string format_double(double v);  // %.17g

struct DesignFile {
  Points points;                     // d x m
  std::optional<Vector> weights;     // the optional trailing w column
  std::optional<Vector> pruned;      // optional pruned flags (weights files)
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::string kind;

  void add_row(std::vector<std::string> row);
  std::string to_string() const;
  void write(const std::filesystem::path& path) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

void write_design(const std::filesystem::path& path, const Points& pts,
                  const Vector* weights = nullptr, const Vector* pruned = nullptr);
DesignFile read_design(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& text);
std::string hash_hex(const std::string& text);

}  // namespace herdval
