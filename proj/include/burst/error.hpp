#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace burst {

// Argument outside the mathematical domain of an operation (negative volume, price point > 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Name that does not resolve (unknown GPU label, unknown provider, ...).
class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. The message carries line or key context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One or more semantic violations in an otherwise well-formed input. All violations are collected
// before throwing so callers can report them together.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace burst
