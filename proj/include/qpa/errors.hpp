#pragma once

#include <stdexcept>
#include <string>

namespace qpa {

/// Invalid constructor or call parameter (e.g. non-positive steepness).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Vector lengths disagree (bids vs. values, bounds vs. values).
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A formula is undefined at the given input: all-zero bids, a bidder
/// holding the whole allocation, no positive rival bid.
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Root finding did not resolve its bracket within the iteration cap.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qpa
