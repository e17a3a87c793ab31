#pragma once

#include <stdexcept>
#include <string>

namespace minar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A probability, count or rate outside its admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Thinning matrix with spectral radius >= 1 where stationarity is required.
class StationarityError : public Error {
 public:
  using Error::Error;
};

/// Iterative routine failed to reach its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Estimation cannot proceed on the supplied data (too short, degenerate).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Caller combined arguments that make no sense together.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or stream.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace minar
