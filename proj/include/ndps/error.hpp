#ifndef NDPS_ERROR_HPP
#define NDPS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ndps {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/parameter shapes do not agree.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

// Invalid argument value (bad stride, out-of-range constant, ...).
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& msg)
      : Error("argument error: " + msg) {}
};

// Non-finite values encountered where finite ones are required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg)
      : Error("numeric error: " + msg) {}
};

// Operation invoked in an invalid state (e.g. backward on a spent graph).
class StateError : public Error {
 public:
  explicit StateError(const std::string& msg) : Error("state error: " + msg) {}
};

// Malformed input data (audio format, manifest, config file).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg)
      : Error("format error: " + msg) {}
};

// Dataset-level problem (misaligned clip, missing pair, empty corpus).
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error("data error: " + msg) {}
};

// Corrupt or truncated serialized state; carries the file offset at which
// parsing failed.
class IntegrityError : public Error {
 public:
  IntegrityError(const std::string& msg, long long offset)
      : Error("integrity error at offset " + std::to_string(offset) + ": " +
              msg),
        offset_(offset) {}
  long long offset() const { return offset_; }

 private:
  long long offset_;
};

}  // namespace ndps

#endif  // NDPS_ERROR_HPP
