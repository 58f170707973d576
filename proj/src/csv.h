#pragma once

#include <istream>
#include <string>
#include <vector>

namespace shuttlekit::csv {

// Plain comma-separated text: no quoting, no embedded commas.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lineNumbers;
};

std::vector<std::string> splitLine(const std::string& line);

/// Reads a table. When `hasHeader` is false every non-blank line is a row.
Table read(std::istream& in, bool hasHeader = true);

/// Parses a double, throwing InvalidInput with the line number on failure.
double toDouble(const std::string& field, std::size_t line);

/// Index of a header column; throws InvalidInput if missing.
std::size_t column(const Table& t, const std::string& name);

} // namespace shuttlekit::csv
