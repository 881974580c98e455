#pragma once

#include <stdexcept>
#include <string>

namespace icens {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Parameter outside Xi, invalid hyperparameter, or argument outside a
// function's domain.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double estimate, double error_estimate)
      : Error(what), estimate_(estimate), error_estimate_(error_estimate) {}
  const char* kind() const noexcept override { return "quadrature_error"; }
  double estimate() const noexcept { return estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double estimate_;
  double error_estimate_;
};

// Optimizer or root finder did not produce a solution.
class ConvergenceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "convergence_error"; }
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, double condition_number)
      : Error(what), condition_number_(condition_number) {}
  const char* kind() const noexcept override { return "singular_matrix"; }
  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

// Malformed or invalid input data.
class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data_error"; }
};

}  // namespace icens
