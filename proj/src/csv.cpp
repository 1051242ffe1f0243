#include "vicscan/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace vicscan {

std::string format_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV file: " + path);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    row.reserve(t.header.size());
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        throw ConfigError("non-numeric CSV cell '" + cell + "' in " + path);
      row.push_back(v);
    }
    if (row.size() != t.header.size())
      throw ConfigError("ragged CSV row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : out_(path), width_(header.size()), path_(path) {
  if (!out_) throw ConfigError("cannot open CSV file for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_)
    throw ConfigError("CSV row width mismatch writing " + path_);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_sig9(values[i]);
  }
  out_ << '\n';
}

void CsvWriter::raw_line(const std::string& line) { out_ << line << '\n'; }

CsvWriter::~CsvWriter() = default;

}  // namespace vicscan
