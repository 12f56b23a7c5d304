#pragma once

#include <stdexcept>
#include <string>

namespace rnnbench {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A forward value came out NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Misuse of an API precondition (e.g. backward from a non-scalar node).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration: bad lengths, ranges, names, split sizes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A generator was asked for a kind it does not produce.
class InvalidKindError : public Error {
 public:
  using Error::Error;
};

/// A simulated trajectory overflowed or otherwise left the reals.
class GenerationDivergedError : public Error {
 public:
  using Error::Error;
};

/// ARFIMA fractional order outside [0, 0.5).
class NonstationaryOrderError : public Error {
 public:
  using Error::Error;
};

/// Training partition is constant, so min-max scaling is undefined.
class DegenerateScaleError : public Error {
 public:
  using Error::Error;
};

/// Every run of every grid configuration failed.
class ExperimentError : public Error {
 public:
  using Error::Error;
};

/// A behavior mean was requested while some of its DGPs have no result.
class IncompleteBehaviorError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing an artifact failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rnnbench
