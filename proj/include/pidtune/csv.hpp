#pragma once

#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace pidtune {

/// Shortest decimal form that round-trips exactly through parse_double.
std::string fmt_double(double v);

double parse_double(std::string_view text);  // throws std::invalid_argument
long long parse_int(std::string_view text);  // throws std::invalid_argument

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);  // throws std::runtime_error

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
};

}  // namespace pidtune
