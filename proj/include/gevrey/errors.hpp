#pragma once

#include <stdexcept>
#include <string>

namespace gevrey {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A field claimed to be real is not Hermitian-symmetric.
class SymmetryError : public Error {
 public:
  using Error::Error;
};

/// Grid too coarse to represent the requested lattice.
class UndersamplingError : public Error {
 public:
  using Error::Error;
};

/// A weight or series value left the representable range.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Series non-convergence or numerical blow-up during time stepping.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double t = 0.0)
      : Error(what), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The sn traveling wave does not close on the torus for the given data.
class PeriodicityFitError : public Error {
 public:
  PeriodicityFitError(const std::string& what, double admissible_lambda)
      : Error(what), admissible_lambda_(admissible_lambda) {}
  double admissible_lambda() const noexcept { return admissible_lambda_; }

 private:
  double admissible_lambda_;
};

/// A checked inequality or precondition between computed quantities failed.
class InvariantViolation : public Error {
 public:
  InvariantViolation(const std::string& what, double t = 0.0)
      : Error(what), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Malformed or schema-violating configuration file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gevrey
