#include "acp/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace acp {

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  if (!first_) out_ << ',';
  first_ = false;
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    out_ << s;
    return *this;
  }
  out_ << '"';
  for (char c : s) {
    if (c == '"') out_ << '"';
    out_ << c;
  }
  out_ << '"';
  return *this;
}

CsvWriter& CsvWriter::cell(double x) { return cell(std::string_view(fmt_double(x))); }
CsvWriter& CsvWriter::cell(long long x) { return cell(std::string_view(std::to_string(x))); }
CsvWriter& CsvWriter::cell(unsigned long long x) { return cell(std::string_view(std::to_string(x))); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (const auto& c : cells) cell(c);
  end_row();
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace acp
