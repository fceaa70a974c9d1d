#pragma once

#include <string>
#include <vector>

namespace vqforge {

// Plain CSV, no quoting: every field in the toolkit's formats is an id,
// an enum name or a number, none of which contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // column index by header name, -1 if absent
  int column(const std::string& name) const;
};

std::vector<std::string> split_csv_line(const std::string& line);
CsvTable read_csv(const std::string& path);

double parse_double(const std::string& s, const std::string& what);
long long parse_int(const std::string& s, const std::string& what);

// shortest representation that round-trips a double exactly
std::string format_double(double v);

}  // namespace vqforge
