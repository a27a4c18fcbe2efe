#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gazeaug {

enum class ErrorCode {
  InvalidArgument,
  NonUnitInput,
  DegenerateGeometry,
  SingularNormalEquations,
  NoConvergence,
  BehindCamera,
  EmptyPool,
  EmptyAfterFilter,
  RenderFailure,
  LabelMismatch,
  MissingTarget,
  DimensionMismatch,
  TooSmall,
  ZeroVector,
  NonFinite,
  TooFewRows,
  EmptyRun,
  Parse,
  VersionMismatch,
  Io,
  External,
};

const char* errorCodeName(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(errorCodeName(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failures carry the line (text formats) or byte offset (binary formats).
class ParseError : public Error {
 public:
  enum class Unit { Line, Byte };

  ParseError(const std::string& source, Unit unit, std::uint64_t position, const std::string& what)
      : Error(ErrorCode::Parse, source + (unit == Unit::Line ? ":" : "@byte ") +
                                    std::to_string(position) + ": " + what),
        unit_(unit),
        position_(position) {}

  Unit unit() const noexcept { return unit_; }
  std::uint64_t position() const noexcept { return position_; }

 private:
  Unit unit_;
  std::uint64_t position_;
};

inline const char* errorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonUnitInput: return "NonUnitInput";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::RenderFailure: return "RenderFailure";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::MissingTarget: return "MissingTarget";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::EmptyRun: return "EmptyRun";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::External: return "ExternalError";
  }
  return "Unknown";
}

}  // namespace gazeaug
