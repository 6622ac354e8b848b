#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace resp {

/// Failure categories raised across the workbench. Tests match on these
/// rather than on message text.
enum class Errc {
  InvalidArgument,
  MalformedWav,
  UnsupportedEncoding,
  IoFailure,
  InvalidClass,
  ParseError,
  EmptyCycle,
  TooFewGroups,
  SilentInput,
  EmptyNoiseLibrary,
  SignalTooShort,
  ColaViolation,
  BadRange,
  ShapeMismatch,
  NonScalarLoss,
  LengthMismatch,
  EmptyDataset,
  DivergenceDetected,
  EmptyClass,
  EmptyEvaluation,
  NoNormals,
  NoAbnormals,
  SilentReference,
  TooShort,
  DegenerateVariance,
  TooFewSamples,
  TooFewPoints,
  UnknownFormat,
  ConfigError,
  NotFound,
  LeakageDetected,
};

inline constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MalformedWav: return "MalformedWav";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::IoFailure: return "IoFailure";
    case Errc::InvalidClass: return "InvalidClass";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyCycle: return "EmptyCycle";
    case Errc::TooFewGroups: return "TooFewGroups";
    case Errc::SilentInput: return "SilentInput";
    case Errc::EmptyNoiseLibrary: return "EmptyNoiseLibrary";
    case Errc::SignalTooShort: return "SignalTooShort";
    case Errc::ColaViolation: return "ColaViolation";
    case Errc::BadRange: return "BadRange";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonScalarLoss: return "NonScalarLoss";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::DivergenceDetected: return "DivergenceDetected";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::EmptyEvaluation: return "EmptyEvaluation";
    case Errc::NoNormals: return "NoNormals";
    case Errc::NoAbnormals: return "NoAbnormals";
    case Errc::SilentReference: return "SilentReference";
    case Errc::TooShort: return "TooShort";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::UnknownFormat: return "UnknownFormat";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NotFound: return "NotFound";
    case Errc::LeakageDetected: return "LeakageDetected";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace resp
