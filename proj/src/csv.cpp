#include "csv.h"

#include "shuttlekit/error.h"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fmt/format.h>

namespace shuttlekit::csv {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

} // namespace

std::vector<std::string> splitLine(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

Table read(std::istream& in, bool hasHeader) {
  Table t;
  std::string line;
  std::size_t lineNo = 0;
  bool headerDone = !hasHeader;
  while (std::getline(in, line)) {
    ++lineNo;
    if (trim(line).empty()) {
      continue;
    }
    auto fields = splitLine(line);
    if (!headerDone) {
      t.header = std::move(fields);
      headerDone = true;
      continue;
    }
    if (hasHeader && fields.size() != t.header.size()) {
      fail(
          ErrorKind::InvalidInput,
          fmt::format(
              "line {}: expected {} fields, found {}", lineNo, t.header.size(), fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lineNumbers.push_back(lineNo);
  }
  return t;
}

double toDouble(const std::string& field, std::size_t line) {
  if (field.empty()) {
    fail(ErrorKind::InvalidInput, fmt::format("line {}: empty numeric field", line));
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE) {
    fail(ErrorKind::InvalidInput, fmt::format("line {}: '{}' is not a number", line, field));
  }
  return v;
}

std::size_t column(const Table& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) {
    fail(ErrorKind::InvalidInput, fmt::format("missing CSV column '{}'", name));
  }
  return static_cast<std::size_t>(std::distance(t.header.begin(), it));
}

} // namespace shuttlekit::csv
