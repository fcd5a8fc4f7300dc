#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nilrand {

// Malformed textual input (words, presentation files, JSON systems).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_ = 0;
};

// Operands living in different groups or vector spaces.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A query whose decision procedure needs a full-rank exponent matrix (or
// another structural precondition) that the presentation does not satisfy.
// Never folded into a boolean answer.
class InconclusiveError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Enumeration or memory budget exceeded.
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nilrand
