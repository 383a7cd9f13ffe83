#include "kinv/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace kinv {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ptrdiff_t CsvTable::find_column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("csv: empty input");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  CsvTable table;
  {
    std::istringstream header(line);
    std::string field;
    while (std::getline(header, field, ',')) {
      table.columns.push_back(field);
    }
  }
  if (table.columns.empty()) {
    throw FormatError("csv: header row has no columns");
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.columns.size());
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str()) {
        throw FormatError("csv: non-numeric field '" + field + "' at line " +
                          std::to_string(line_no));
      }
      row.push_back(v);
    }
    if (row.size() != table.columns.size()) {
      throw FormatError("csv: line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(table.columns.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("csv: cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace kinv
