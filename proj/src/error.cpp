#include "xnap/error.hpp"

namespace xnap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadTimestamp: return "BadTimestamp";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::ReservedLabelCollision: return "ReservedLabelCollision";
    case ErrorCode::UnknownActivity: return "UnknownActivity";
    case ErrorCode::PrefixTooLong: return "PrefixTooLong";
    case ErrorCode::TraceTooShort: return "TraceTooShort";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::TooFewTraces: return "TooFewTraces";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NotACopyTask: return "NotACopyTask";
  }
  return "Unknown";
}

}  // namespace xnap
