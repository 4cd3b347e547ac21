#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tailtree/errors.hpp"

namespace tailtree {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Minimal comma-separated reader: no quoting, fields trimmed of surrounding
/// whitespace, blank lines skipped.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

double parse_csv_double(const std::string& field);

/// Shortest decimal string that round-trips to the same double.
std::string format_csv_double(double value);

}  // namespace tailtree
