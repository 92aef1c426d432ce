#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pnr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error in an expression, with the byte offset and the tokens that would have been accepted.
class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t offset, std::vector<std::string> expected = {})
      : Error(format(message, offset, expected)), offset_(offset), expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  static std::string format(const std::string& message, std::size_t offset,
                            const std::vector<std::string>& expected) {
    std::string out = message + " at offset " + std::to_string(offset);
    if (!expected.empty()) {
      out += " (expected one of:";
      for (const auto& e : expected) out += " " + e;
      out += ")";
    }
    return out;
  }

  std::size_t offset_;
  std::vector<std::string> expected_;
};

class UnknownIdentifierError : public ParseError {
 public:
  UnknownIdentifierError(const std::string& name, std::size_t offset)
      : ParseError("unknown identifier '" + name + "'", offset), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Evaluation outside the domain of a field: division by zero, excluded point, singular operator.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (problem files, catalog coefficients, dimensions).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A trajectory left the coordinate patch before t = 1.
class FlowEscapeError : public DomainError {
 public:
  FlowEscapeError(double time, const std::string& what)
      : DomainError("flow left the patch at t=" + std::to_string(time) + ": " + what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace pnr
