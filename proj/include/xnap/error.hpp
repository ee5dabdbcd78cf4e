#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xnap {

enum class ErrorCode {
  Io,
  InvalidArgument,
  MissingColumn,
  BadTimestamp,
  EmptyLog,
  ReservedLabelCollision,
  UnknownActivity,
  PrefixTooLong,
  TraceTooShort,
  ShapeMismatch,
  NonFiniteInput,
  EmptyDataset,
  NonFiniteLoss,
  VersionMismatch,
  CorruptModel,
  TooFewTraces,
  LengthMismatch,
  InvalidSpec,
  NotACopyTask,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for all library failures; `code()` tells callers
/// (the CLI in particular) which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace xnap
