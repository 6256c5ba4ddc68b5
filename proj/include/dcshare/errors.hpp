#pragma once

#include <stdexcept>
#include <string>

namespace dcshare {

/// Base for all library errors. `rule` is a stable identifier suitable for
/// matching in tests and CLI output, independent of the human-readable text.
class Error : public std::runtime_error {
 public:
  Error(std::string rule, const std::string& what_arg)
      : std::runtime_error(rule + ": " + what_arg), rule_(std::move(rule)) {}
  const std::string& rule() const noexcept { return rule_; }

 private:
  std::string rule_;
};

/// Structural problems in inputs: bad documents, bad fields, bad arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Loss model fails the convexity conditions; the program must not be built.
class GateError : public Error {
 public:
  using Error::Error;
};

/// The constraint set has no strictly feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra or iteration breakdown inside the solver.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Steady-state simulation could not converge or reached a non-physical state.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// Parameter extraction from measurements failed (rank-deficient or out of range).
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcshare
