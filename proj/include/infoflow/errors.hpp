#pragma once

#include <stdexcept>
#include <string>

namespace infoflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A vector or matrix does not have the dimension the model expects.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// The parameters describe no valid distribution (non-finite entries,
/// non-positive-definite precision, out-of-range sizes).
class InvalidStateError : public Error {
public:
  using Error::Error;
};

/// A computation produced a non-finite value or an iteration failed.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace infoflow
