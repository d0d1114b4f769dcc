#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ulamkit {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed expression source. Carries the byte offset of the first
/// offending character and a hint about what was expected there.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset, std::string expected)
      : Error(what + " at byte " + std::to_string(offset) +
              (expected.empty() ? "" : " (expected " + expected + ")")),
        offset_(offset),
        expected_(std::move(expected)) {}

  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }
  [[nodiscard]] const std::string& expected() const noexcept { return expected_; }

private:
  std::size_t offset_;
  std::string expected_;
};

/// Evaluation hit a pole or left a function's domain. Carries the text of
/// the offending subtree.
class EvalDomainError : public Error {
public:
  EvalDomainError(const std::string& what, std::string subtree)
      : Error(what + " in subexpression `" + subtree + "`"),
        subtree_(std::move(subtree)) {}

  [[nodiscard]] const std::string& subtree() const noexcept { return subtree_; }

private:
  std::string subtree_;
};

/// Differentiation of a non-analytic node (abs, re, im).
class NonDifferentiableError : public Error {
public:
  explicit NonDifferentiableError(std::string subtree)
      : Error("cannot differentiate non-analytic subexpression `" + subtree + "`"),
        subtree_(std::move(subtree)) {}

  [[nodiscard]] const std::string& subtree() const noexcept { return subtree_; }

private:
  std::string subtree_;
};

/// Integrand returned NaN inside a quadrature panel.
class SingularityError : public Error {
public:
  using Error::Error;
};

/// Quadrature could not reach the requested tolerance within the
/// subdivision budget.
class ToleranceError : public Error {
public:
  using Error::Error;
};

/// Evaluation outside the range covered by an antiderivative grid.
class GridCoverageError : public Error {
public:
  using Error::Error;
};

/// A stability hypothesis of the underlying theory failed (kappa does not
/// exist, its supremum is unbounded, or a divergence condition fails).
/// The CLI maps this to exit code 2.
class HypothesisError : public Error {
public:
  using Error::Error;
};

/// A limit sequence failed its Cauchy criterion (anchor extraction).
class NoLimitError : public Error {
public:
  using Error::Error;
};

/// Singular matrix where an inverse was required.
class SingularMatrixError : public Error {
public:
  using Error::Error;
};

/// Bad configuration file or command-line input.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// ODE step size underflowed, typically near a coefficient singularity.
/// Carries the last time the integrator reached successfully.
class StepUnderflowError : public Error {
public:
  StepUnderflowError(const std::string& what, double last_t)
      : Error(what + " (last good t = " + std::to_string(last_t) + ")"),
        last_t_(last_t) {}

  [[nodiscard]] double last_t() const noexcept { return last_t_; }

private:
  double last_t_;
};

}  // namespace ulamkit
