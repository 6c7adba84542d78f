#include <charconv>
#include <cstddef>
#include <string>
#include <vector>

#include "flowvmc/errors.hpp"
#include "flowvmc/io.hpp"

namespace flowvmc {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (const char c : field) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("failed writing file: " + path);
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary), columns_(columns.size()) {
  if (columns.empty()) throw DomainError("CsvWriter: no columns");
  if (!out_) throw IoError("cannot open csv for writing: " + path);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << csv_escape(columns[i]);
  }
  out_ << '\n';
  if (!out_) throw IoError("failed writing csv header: " + path);
}

void CsvWriter::write_row(std::span<const double> values) {
  if (values.size() != columns_)
    throw DomainError("CsvWriter: row width does not match the header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
  if (!out_) throw IoError("failed writing csv row: " + path_);
}

void CsvWriter::close() {
  if (!out_.is_open()) return;
  out_.flush();
  const bool ok = static_cast<bool>(out_);
  out_.close();
  if (!ok) throw IoError("failed writing csv: " + path_);
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (const IoError&) {
  }
}

}  // namespace flowvmc
