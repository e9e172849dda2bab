#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "optnet/types.hpp"

namespace optnet {

// Deterministic CSV emission: '#'-prefixed metadata lines, one header row,
// then data rows. Doubles are printed with %.17g so identical runs produce
// byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);

  void metadata(const std::string& key, const std::string& value);
  void metadata(const std::string& key, double value);

  CsvWriter& field(double v);
  CsvWriter& field(int v);
  CsvWriter& field(const std::string& v);
  void end_row();

  bool good() const { return static_cast<bool>(out_); }
  static std::string format_double(double v);

 private:
  void write_header_if_needed();

  std::ofstream out_;
  std::vector<std::string> columns_;
  std::vector<std::string> meta_;
  bool header_written_ = false;
  std::size_t col_ = 0;
};

}  // namespace optnet
