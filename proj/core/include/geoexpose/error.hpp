#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geoexpose {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input. Carries the source (usually a file path) and a 1-based
/// line number, 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(format(source, line, what)), source_(std::move(source)), line_(line), detail_(what) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  /// The message without the source/line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(const std::string& source, std::size_t line,
                            const std::string& what) {
    std::string out = source;
    if (line != 0) out += ":" + std::to_string(line);
    if (!out.empty()) out += ": ";
    return out + what;
  }

  std::string source_;
  std::size_t line_;
  std::string detail_;
};

/// Input parsed, but violates a semantic invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Two rows of a table disagree about the same key.
class ConflictError : public Error {
 public:
  ConflictError(std::string key, const std::string& what)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class UnknownCountry : public Error {
 public:
  UnknownCountry(std::string code, const std::string& what)
      : Error(what), code_(std::move(code)) {}
  explicit UnknownCountry(const std::string& code)
      : UnknownCountry(code, "unknown country code '" + code + "'") {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public GeometryError {
 public:
  EmptyInput() : GeometryError("convex hull of an empty point set") {}
};

}  // namespace geoexpose
