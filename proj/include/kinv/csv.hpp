#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kinv/errors.hpp"

namespace kinv {

/// CSV schema mismatch or malformed content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Formats a double with 17 significant digits so values round-trip exactly.
std::string format_double(double v);

/// Minimal CSV table: header row plus numeric data rows.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Column index, or -1 when absent.
  std::ptrdiff_t find_column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

}  // namespace kinv
