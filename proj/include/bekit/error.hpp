#pragma once

#include <stdexcept>
#include <string>

namespace bekit {

// Malformed or inconsistent input (bad JSON, probabilities not summing to 1,
// asymmetric matrix file, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation is mathematically undefined for the given argument, e.g. a
// negative power of -L applied to a functional with non-zero mean.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Exact enumeration would exceed the desk-scale caps.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Normalisation by a vanishing variance (sigma^2 = 0 and friends).
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace bekit
