#pragma once

#include <stdexcept>
#include <string>

namespace olab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative t, non-finite input,
/// point outside the grid, ball leaving the domain).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Value outside a tabulated or configured range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Ball radius below the grid resolution.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Grid functions defined on incompatible grids.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent problem data (h < psi on the boundary, malformed tables, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Operation on an object that is not in a usable state (empty sample set, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Mollification radius incompatible with the measure support.
class LevelError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace olab
