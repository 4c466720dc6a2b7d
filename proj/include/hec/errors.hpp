#pragma once

#include <stdexcept>
#include <string>

namespace hec {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Precondition violations: bad dimensions, out-of-range values, malformed input.
class InvalidInput : public Error {
public:
  using Error::Error;
};

// Fewer samples / points / correspondences than the operation requires.
class InsufficientData : public Error {
public:
  using Error::Error;
};

// Input geometry does not constrain the solution: parallel motion axes,
// collinear points, near-parallel encoding columns, rank-deficient systems.
class DegenerateGeometry : public Error {
public:
  using Error::Error;
};

// Numerical breakdown: eigensolver non-convergence, matrix square root of a
// singular matrix, quadratic with no real root, non-positive-definite input.
class NumericalFailure : public Error {
public:
  using Error::Error;
};

// Robust estimation failed to find enough agreeing data.
class NoConsensus : public Error {
public:
  using Error::Error;
};

// Nearest-neighbor association produced no pairs within the gating distance.
class EmptyCorrespondence : public Error {
public:
  using Error::Error;
};

}  // namespace hec
