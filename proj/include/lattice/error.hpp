#pragma once

#include <stdexcept>
#include <string>

namespace lattice {

// Malformed input text (wrong length, non-digit characters, bad headers).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input with a value outside its permitted range.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a precondition (shape mismatch, non-canonical key, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Numerical failure during integration or training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lattice
