#pragma once

#include <stdexcept>
#include <string>

namespace lsir {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A Householder column norm vanished during factorization.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

class SingularTriangular : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// The high-precision reference solve stopped contracting.
class OracleDivergence : public Error {
 public:
  using Error::Error;
};

/// A correction came back with non-finite entries.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace lsir
