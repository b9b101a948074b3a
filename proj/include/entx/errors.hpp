#pragma once

#include <stdexcept>
#include <string>

namespace entx {

// Base class of all errors thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not match the operation.
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

// A vector or matrix that must carry unit probability mass does not.
class NotNormalized : public Error {
public:
  using Error::Error;
};

// An iterative or algebraic routine failed to reach its advertised accuracy.
class NumericalFailure : public Error {
public:
  using Error::Error;
};

// A requested diagonal map has an entry outside [0, 1].
class NotContraction : public Error {
public:
  using Error::Error;
};

// The target state cannot be produced from the input (success probability 0).
class InfeasibleTarget : public Error {
public:
  using Error::Error;
};

// The input spectrum is not majorized by the target spectrum.
class NotMajorized : public Error {
public:
  using Error::Error;
};

// A zero Schmidt coefficient sits where the construction needs to divide by it.
class SingularInput : public Error {
public:
  using Error::Error;
};

// Stacked measurement operators do not form an isometry.
class NotIsometry : public Error {
public:
  using Error::Error;
};

// The requested branch count cannot carry the required probability mass.
class InfeasibleDistribution : public Error {
public:
  using Error::Error;
};

// A tensor-product space would exceed the configured size cap.
class DimensionOverflow : public Error {
public:
  using Error::Error;
};

}  // namespace entx
