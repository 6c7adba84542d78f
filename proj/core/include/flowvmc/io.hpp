#pragma once

#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace flowvmc {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

/// RFC 4180 field quoting: fields containing commas, quotes, or line
/// breaks are wrapped in double quotes with embedded quotes doubled.
std::string csv_escape(const std::string& field);

void write_text_file(const std::string& path, const std::string& content);

/// Streams numeric rows under a fixed header. Lines end with \n; every
/// write is checked so failures surface as IoError at the offending row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);

  void write_row(std::span<const double> values);

  /// Flushes and verifies the stream; also called harmlessly on destruction.
  void close();

  ~CsvWriter();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
};

}  // namespace flowvmc
