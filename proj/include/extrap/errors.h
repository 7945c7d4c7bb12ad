#ifndef EXTRAP_ERRORS_H_
#define EXTRAP_ERRORS_H_

#include <stdexcept>
#include <string>

namespace extrap {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A kernel produced or received a NaN/Inf entry.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Input outside the mathematical domain of an operation (e.g. k < 2).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A documented precondition does not hold.
class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& what, double measured = 0.0)
      : Error(what), measured_(measured) {}

  // The offending quantity, when the precondition is quantitative.
  double measured() const { return measured_; }

 private:
  double measured_;
};

// Matrix too large for a numerically fragile routine.
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

// An iterative solver ran out of sweeps.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

// The requested evaluation mode does not apply to the given student.
class ModeError : public Error {
 public:
  using Error::Error;
};

// Malformed file or experiment configuration.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace extrap

#endif  // EXTRAP_ERRORS_H_
