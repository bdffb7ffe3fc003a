#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slowtrack {

/// Precondition violated by caller-supplied data (bad shapes, empty inputs).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation called on an object that is not ready for it.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or truncated file. Carries the byte offset where decoding failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit FormatError(const std::string& what)
      : std::runtime_error(what), offset_(0) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Non-finite values or optimizer breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace slowtrack
