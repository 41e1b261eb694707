#pragma once

#include <stdexcept>
#include <string>

namespace pml {

/// Precondition violated by the caller (bad sizes, out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The input is well-formed but the requested quantity is undefined for it,
/// e.g. an empty ball when a number density is needed.
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative solver ran out of iterations before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations, double violation)
      : std::runtime_error(what), iterations_(iterations), violation_(violation) {}

  int iterations() const noexcept { return iterations_; }
  double violation() const noexcept { return violation_; }

 private:
  int iterations_;
  double violation_;
};

}  // namespace pml
