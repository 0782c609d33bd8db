#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ceres {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A structural causal model failed validation or could not be loaded.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Conditioning event has zero probability under the model.
class ConditionUnsupported : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class InvalidProblem : public Error {
 public:
  using Error::Error;
};

/// Iterative solver hit its iteration cap; carries the best iterate found.
class MaxIterations : public Error {
 public:
  MaxIterations(const std::string& what, std::vector<double> best_iterate, double residual)
      : Error(what), best_iterate_(std::move(best_iterate)), residual_(residual) {}

  [[nodiscard]] const std::vector<double>& best_iterate() const { return best_iterate_; }
  [[nodiscard]] double residual() const { return residual_; }

 private:
  std::vector<double> best_iterate_;
  double residual_;
};

class TimeOrderError : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

}  // namespace ceres
