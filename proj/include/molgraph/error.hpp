// Copyright 2026 The molgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace molgraph {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid graph or dataset content (self-loop, duplicate edge, ...).
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Shape or argument mismatch in numeric code.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training diverged or an optimizer saw a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace molgraph
