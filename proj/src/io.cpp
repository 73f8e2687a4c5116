#include "herdval/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace herdval {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("CsvTable: row width does not match header");
  }
  rows.push_back(std::move(row));
}

std::string CsvTable::to_string() const {
  std::ostringstream os;
  os << "# herdval-csv v" << kCsvVersion << " " << kind << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    os << columns[i] << (i + 1 < columns.size() ? "," : "");
  }
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << row[i] << (i + 1 < row.size() ? "," : "");
    }
    os << "\n";
  }
  return os.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << to_string();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CsvTable t;
  bool header_parsed = false;
  bool version_checked = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line);
      std::string hash, tag;
      ls >> hash >> tag;
      if (tag.rfind("herdval-csv", 0) == 0) {
        std::string ver, kind;
        ls >> ver >> kind;
        if (ver != "v" + std::to_string(kCsvVersion)) {
          throw std::runtime_error("unsupported CSV schema version: " + ver);
        }
        t.kind = kind;
        version_checked = true;
      }
      continue;
    }
    if (!header_parsed) {
      t.columns = split_csv_line(line);
      header_parsed = true;
      continue;
    }
    auto row = split_csv_line(line);
    if (row.size() != t.columns.size()) {
      throw std::runtime_error("CSV row width does not match header");
    }
    t.rows.push_back(std::move(row));
  }
  if (!header_parsed) throw std::runtime_error("CSV file has no header");
  (void)version_checked;  // plain headerless CSV from other tools is accepted
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

void write_design(const std::filesystem::path& path, const Points& pts, const Vector* weights,
                  const Vector* pruned) {
  CsvTable t;
  t.kind = "design";
  const int d = static_cast<int>(pts.rows());
  for (int i = 0; i < d; ++i) t.columns.push_back("x" + std::to_string(i + 1));
  if (weights != nullptr) t.columns.push_back("w");
  if (pruned != nullptr) t.columns.push_back("pruned");
  for (Index j = 0; j < pts.cols(); ++j) {
    std::vector<std::string> row;
    for (int i = 0; i < d; ++i) row.push_back(format_double(pts(i, j)));
    if (weights != nullptr) row.push_back(format_double((*weights)[j]));
    if (pruned != nullptr) row.push_back((*pruned)[j] != 0.0 ? "1" : "0");
    t.add_row(std::move(row));
  }
  t.write(path);
}

DesignFile read_design(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  int d = 0;
  int w_col = -1;
  int pruned_col = -1;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    const std::string& c = t.columns[i];
    if (c == "w") {
      w_col = static_cast<int>(i);
    } else if (c == "pruned") {
      pruned_col = static_cast<int>(i);
    } else if (c.size() >= 2 && c[0] == 'x') {
      ++d;
    } else {
      throw std::runtime_error("design CSV: unexpected column '" + c + "'");
    }
  }
  if (d == 0) throw std::runtime_error("design CSV: no coordinate columns");
  DesignFile f;
  f.points.resize(d, static_cast<Index>(t.rows.size()));
  if (w_col >= 0) f.weights = Vector(static_cast<Index>(t.rows.size()));
  if (pruned_col >= 0) f.pruned = Vector(static_cast<Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (int i = 0; i < d; ++i) {
      f.points(i, static_cast<Index>(r)) = std::stod(t.rows[r][static_cast<std::size_t>(i)]);
    }
    if (w_col >= 0) {
      (*f.weights)[static_cast<Index>(r)] = std::stod(t.rows[r][static_cast<std::size_t>(w_col)]);
    }
    if (pruned_col >= 0) {
      (*f.pruned)[static_cast<Index>(r)] =
          std::stod(t.rows[r][static_cast<std::size_t>(pruned_col)]);
    }
  }
  return f;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(const std::string& text) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

}  // namespace herdval
