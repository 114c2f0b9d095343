#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace polsar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated file. `offset` is the byte position where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Precondition or invariant violation on caller-supplied data.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Determinant of a covariance matrix is not strictly positive.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, long epoch) : Error(what), epoch_(epoch) {}
  /// Offending epoch, or -1 for the summed matrix.
  long epoch() const noexcept { return epoch_; }

 private:
  long epoch_;
};

}  // namespace polsar
