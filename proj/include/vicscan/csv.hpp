#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "vicscan/common.hpp"

namespace vicscan {

/// Formats a double with 9 significant digits (file-format contract for all
/// numeric CSV payloads in this project).
std::string format_sig9(double v);

/// Minimal CSV support: comma separator, no quoting (none of our payloads
/// need it), first line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void raw_line(const std::string& line);
  ~CsvWriter();

 private:
  std::ofstream out_;
  std::size_t width_;
  std::string path_;
};

}  // namespace vicscan
