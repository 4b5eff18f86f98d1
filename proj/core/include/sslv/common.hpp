#pragma once

#include <stdexcept>
#include <string>

namespace sslv {

// Scalar element type. Default is 64-bit so gradient verification with
// central finite differences is meaningful; -DSSLV_REAL_FLOAT32 selects
// 32-bit globally.
#ifdef SSLV_REAL_FLOAT32
using real = float;
#else
using real = double;
#endif

enum class ErrorKind {
  InvalidShape,
  ShapeMismatch,
  InvalidRange,
  InvalidParameter,
  IndexOutOfRange,
  InvalidLabel,
  InvalidBatch,
  FormatError,
  StateError,
  InsufficientFrames,
  MissingFrame,
  InsufficientData,
  InvalidDataset,
  IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace sslv
