#include "detkit/error.hpp"

namespace detkit {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParams: return "invalid-params";
    case ErrorKind::OutOfFrame: return "out-of-frame";
    case ErrorKind::InvalidDetection: return "invalid-detection";
    case ErrorKind::InvalidGroundTruth: return "invalid-ground-truth";
    case ErrorKind::UnknownModel: return "unknown-model";
    case ErrorKind::UnknownImage: return "unknown-image";
    case ErrorKind::NoGroundTruth: return "no-ground-truth";
    case ErrorKind::EmptySeries: return "empty-series";
    case ErrorKind::MissingReport: return "missing-report";
    case ErrorKind::ZeroBaseline: return "zero-baseline";
    case ErrorKind::DegenerateTransform: return "degenerate-transform";
    case ErrorKind::SizeMismatch: return "size-mismatch";
    case ErrorKind::EmptyDataset: return "empty-dataset";
    case ErrorKind::ParseError: return "parse-error";
    case ErrorKind::UnknownClass: return "unknown-class";
    case ErrorKind::MalformedBox: return "malformed-box";
    case ErrorKind::ConfidenceOutOfRange: return "confidence-out-of-range";
    case ErrorKind::MixedThresholds: return "mixed-thresholds";
    case ErrorKind::IoError: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      message_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace detkit
