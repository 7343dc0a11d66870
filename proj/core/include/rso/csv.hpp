#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rso {

// RFC 4180 reader: comma separated, double-quote quoting with "" escapes,
// quoted fields may span lines. Accepts LF and CRLF line endings and skips a
// leading UTF-8 byte-order mark.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in);

  // Reads the next record into `fields`. Returns false at end of input.
  // Blank lines are skipped.
  bool next(std::vector<std::string>& fields);

  // 1-based line number where the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
  bool first_ = true;
};

void write_csv_row(std::ostream& out, std::span<const std::string> fields);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// Parses a finite decimal number, tolerating surrounding blanks. Returns
// nullopt for empty or unparsable text.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace rso
