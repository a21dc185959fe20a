#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace acp {

// shortest round-trip decimal representation
std::string fmt_double(double x);

// RFC 4180 quoting with LF line endings
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  CsvWriter& cell(std::string_view s);
  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(unsigned long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(long x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(unsigned long x) { return cell(static_cast<unsigned long long>(x)); }
  CsvWriter& cell(bool x) { return cell(std::string_view(x ? "true" : "false")); }
  CsvWriter& cell(const char* s) { return cell(std::string_view(s)); }
  CsvWriter& cell(const std::string& s) { return cell(std::string_view(s)); }
  void row(const std::vector<std::string>& cells);
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace acp
