#pragma once

#include <stdexcept>
#include <string>

namespace selfsim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// The IFS or contraction ratio is not in the regime a bound applies to.
class RegimeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "regime"; }
};

/// An atom, cell or search-node budget would be exceeded.
class BudgetError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "budget"; }
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "convergence"; }
};

class NoRootError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "no_root"; }
};

/// Fewer regression levels than needed survive the resolution cut.
class DegenerateRangeError : public DomainError {
 public:
  using DomainError::DomainError;
  const char* kind() const noexcept override { return "degenerate_range"; }
};

class PreconditionError : public DomainError {
 public:
  using DomainError::DomainError;
  const char* kind() const noexcept override { return "precondition"; }
};

}  // namespace selfsim
