#include "rpf/io/csv.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

namespace rpf::io {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

void CsvRow::separate() {
  if (!empty_) line_ += ',';
  empty_ = false;
}

CsvRow& CsvRow::add(double value) {
  separate();
  line_ += format_number(value);
  return *this;
}

CsvRow& CsvRow::add(long long value) {
  separate();
  line_ += std::to_string(value);
  return *this;
}

CsvRow& CsvRow::add(unsigned long long value) {
  separate();
  line_ += std::to_string(value);
  return *this;
}

CsvRow& CsvRow::add(std::string_view text) {
  separate();
  line_ += text;
  return *this;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace rpf::io
