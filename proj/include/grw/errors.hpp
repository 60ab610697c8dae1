#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grw {

enum class ErrorKind {
  NonPositiveWarp,
  BadParams,
  OutOfInterval,
  UnsupportedDimension,
  PoleTooClose,
  ShapeMismatch,
  NotSpacelike,
  HeightOutOfInterval,
  EigenFailure,
  UnsupportedFiber,
  NormalizeByZero,
  HypothesisViolation,
  NegativeHk,
  BadG,
  AmbiguousTail,
  NonConvergence,
  LostEllipticity,
  ParseError,
  SchemaVersionMismatch,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveWarp: return "NonPositiveWarp";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::OutOfInterval: return "OutOfInterval";
    case ErrorKind::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorKind::PoleTooClose: return "PoleTooClose";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NotSpacelike: return "NotSpacelike";
    case ErrorKind::HeightOutOfInterval: return "HeightOutOfInterval";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::UnsupportedFiber: return "UnsupportedFiber";
    case ErrorKind::NormalizeByZero: return "NormalizeByZero";
    case ErrorKind::HypothesisViolation: return "HypothesisViolation";
    case ErrorKind::NegativeHk: return "NegativeHk";
    case ErrorKind::BadG: return "BadG";
    case ErrorKind::AmbiguousTail: return "AmbiguousTail";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::LostEllipticity: return "LostEllipticity";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable kind; what() is "<Kind>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace grw
