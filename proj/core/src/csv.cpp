#include "rso/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "rso/error.hpp"

namespace rso {

CsvReader::CsvReader(std::istream& in) : in_(in) {}

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  for (;;) {
    if (first_) {
      first_ = false;
      if (in_.peek() == 0xEF) {
        char bom[3];
        in_.read(bom, 3);
      }
    }
    int c = in_.peek();
    if (c == std::char_traits<char>::eof()) return false;
    if (c == '\n' || c == '\r') {
      in_.get();
      if (c == '\r' && in_.peek() == '\n') in_.get();
      ++line_;
      continue;
    }
    break;
  }

  record_line_ = line_;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  for (;;) {
    const int c = in_.get();
    if (c == std::char_traits<char>::eof()) {
      if (quoted) {
        throw ParseError("line " + std::to_string(record_line_) +
                         ": unterminated quoted field");
      }
      fields.push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && in_.peek() == '\n') in_.get();
      ++line_;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
  }
}

void write_csv_row(std::ostream& out, std::span<const std::string> fields) {
  if (fields.size() == 1 && fields[0].empty()) {
    // A bare newline would read back as a blank (skipped) line.
    out << "\"\"\n";
    return;
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    const bool needs_quotes =
        f.find_first_of(",\"\r\n") != std::string::npos ||
        (!f.empty() && (f.front() == ' ' || f.back() == ' '));
    if (!needs_quotes) {
      out << f;
      continue;
    }
    out << '"';
    for (const char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::optional<long long> parse_int(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  long long value = 0;
  const auto res =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

}  // namespace rso
