#pragma once

#include <stdexcept>
#include <string>

namespace macgame {

/// A value outside the admissible domain (non-positive gain, empty support, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent dimensions between the arrays describing a game or profile.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure to read or write a document.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document contents.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace macgame
