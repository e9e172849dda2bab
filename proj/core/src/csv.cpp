#include "optnet/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace optnet {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : out_(path), columns_(columns) {
  if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
}

std::string CsvWriter::format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CsvWriter::metadata(const std::string& key, const std::string& value) {
  if (header_written_) throw std::logic_error("CsvWriter: metadata after header");
  meta_.push_back("# " + key + " = " + value);
}

void CsvWriter::metadata(const std::string& key, double value) {
  metadata(key, format_double(value));
}

void CsvWriter::write_header_if_needed() {
  if (header_written_) return;
  for (const auto& m : meta_) out_ << m << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i)
    out_ << columns_[i] << (i + 1 < columns_.size() ? "," : "\n");
  header_written_ = true;
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }

CsvWriter& CsvWriter::field(int v) { return field(std::to_string(v)); }

CsvWriter& CsvWriter::field(const std::string& v) {
  write_header_if_needed();
  out_ << v;
  ++col_;
  if (col_ < columns_.size()) out_ << ",";
  return *this;
}

void CsvWriter::end_row() {
  if (col_ != columns_.size())
    throw std::logic_error("CsvWriter: row has wrong number of fields");
  out_ << "\n";
  col_ = 0;
}

}  // namespace optnet
