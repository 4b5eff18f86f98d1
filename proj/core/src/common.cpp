#include "sslv/common.hpp"

namespace sslv {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidShape: return "invalid shape";
    case ErrorKind::ShapeMismatch: return "shape mismatch";
    case ErrorKind::InvalidRange: return "invalid range";
    case ErrorKind::InvalidParameter: return "invalid parameter";
    case ErrorKind::IndexOutOfRange: return "index out of range";
    case ErrorKind::InvalidLabel: return "invalid label";
    case ErrorKind::InvalidBatch: return "invalid batch";
    case ErrorKind::FormatError: return "format error";
    case ErrorKind::StateError: return "state error";
    case ErrorKind::InsufficientFrames: return "insufficient frames";
    case ErrorKind::MissingFrame: return "missing frame";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::InvalidDataset: return "invalid dataset";
    case ErrorKind::IoError: return "io error";
  }
  return "unknown error";
}

}  // namespace sslv
