#pragma once

#include <stdexcept>
#include <string>

namespace detkit {

/// Every failure the toolkit can report. CLI diagnostics print the kind
/// name followed by the message.
enum class ErrorKind {
  InvalidParams,
  OutOfFrame,
  InvalidDetection,
  InvalidGroundTruth,
  UnknownModel,
  UnknownImage,
  NoGroundTruth,
  EmptySeries,
  MissingReport,
  ZeroBaseline,
  DegenerateTransform,
  SizeMismatch,
  EmptyDataset,
  ParseError,
  UnknownClass,
  MalformedBox,
  ConfidenceOutOfRange,
  MixedThresholds,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

  /// Message without the kind prefix, for re-wrapping with extra context.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace detkit
