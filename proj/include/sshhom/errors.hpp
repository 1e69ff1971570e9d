#pragma once

#include <stdexcept>
#include <string>

namespace sshhom {

/// Raised when a run configuration cannot be parsed or violates a
/// precondition. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an internal numerical check (unitarity, convergence,
/// adiabaticity, gap tracking) fails. The CLI maps this to exit code 3.
class NumericalCheckError : public std::runtime_error {
 public:
  NumericalCheckError(std::string invariant, const std::string& what)
      : std::runtime_error(invariant + ": " + what), invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

class GapCollapseError : public NumericalCheckError {
 public:
  explicit GapCollapseError(const std::string& what) : NumericalCheckError("gap", what) {}
};

class ConvergenceError : public NumericalCheckError {
 public:
  ConvergenceError(const std::string& what, int suggested_steps)
      : NumericalCheckError("convergence", what), suggested_steps_(suggested_steps) {}

  int suggested_steps() const noexcept { return suggested_steps_; }

 private:
  int suggested_steps_;
};

}  // namespace sshhom
