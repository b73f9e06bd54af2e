#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mxrot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument, shape mismatch or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed tensor file. `offset()` is the byte position where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), detail_(what), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::uint64_t offset_;
};

/// A numerical routine could not proceed (singular system, failed factorization).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mxrot
