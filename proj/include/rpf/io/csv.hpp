#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rpf::io {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_number(double value);

/// Minimal CSV emitter; fields never contain separators, so no quoting.
class CsvRow {
 public:
  CsvRow& add(double value);
  CsvRow& add(long long value);
  CsvRow& add(int value) { return add(static_cast<long long>(value)); }
  CsvRow& add(unsigned long long value);
  CsvRow& add(std::size_t value) { return add(static_cast<unsigned long long>(value)); }
  CsvRow& add(bool value) { return add(value ? 1LL : 0LL); }
  CsvRow& add(std::string_view text);
  CsvRow& add(const char* text) { return add(std::string_view(text)); }

  const std::string& str() const { return line_; }
  void write(std::ostream& out) const { out << line_ << '\n'; }

 private:
  void separate();
  std::string line_;
  bool empty_ = true;
};

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace rpf::io
