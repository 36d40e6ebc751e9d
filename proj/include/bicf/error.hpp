#pragma once

#include <cstddef>
#include <iostream>
#include <stdexcept>
#include <string>

namespace bicf {

/// Raised for malformed rating input. Carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Raised when an operation would produce or consume an unusable graph.
class GraphError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised for cache files that fail validation.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Diagnostics go to std::clog so they never mix with report output.
inline void warn(const std::string& msg) { std::clog << "warning: " << msg << '\n'; }

}  // namespace bicf
