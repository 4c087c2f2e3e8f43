#pragma once

// Minimal RFC 4180 reader shared by the table loaders: comma separated,
// double-quoted fields may contain commas and doubled quotes. Blank lines and
// lines starting with '#' are skipped.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoexpose/error.hpp"

namespace geoexpose::detail {

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

class CsvReader {
 public:
  explicit CsvReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw ParseError(path, 0, "cannot open file");
  }

  const std::string& path() const noexcept { return path_; }

  std::optional<CsvRow> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line_no_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      std::string_view trimmed = line;
      while (!trimmed.empty() && (trimmed.front() == ' ' || trimmed.front() == '\t')) {
        trimmed.remove_prefix(1);
      }
      if (trimmed.empty() || trimmed.front() == '#') continue;
      return CsvRow{line_no_, split(line)};
    }
    if (in_.bad()) throw ParseError(path_, line_no_, "read error");
    return std::nullopt;
  }

  [[noreturn]] void fail(const CsvRow& row, const std::string& what) const {
    throw ParseError(path_, row.line, what);
  }

 private:
  std::vector<std::string> split(const std::string& line) const {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"' && field.empty()) {
        quoted = true;
      } else if (c == ',') {
        out.push_back(trim(field));
        field.clear();
      } else {
        field.push_back(c);
      }
    }
    if (quoted) throw ParseError(path_, line_no_, "unterminated quoted field");
    out.push_back(trim(field));
    return out;
  }

  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }

  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

}  // namespace geoexpose::detail
