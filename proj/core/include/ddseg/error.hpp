#pragma once

#include <stdexcept>
#include <string>

namespace ddseg {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed container or text format (bad magic, bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Payload shorter or longer than its header declares.
class LengthError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDtypeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Every patch of a class was suppressed, so no distribution exists for it.
class EmptyClassError : public Error {
 public:
  using Error::Error;
};

/// NaN or other non-recoverable numerical breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class PaletteError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// No class survived early rejection and suppression.
class EmptyCandidatesError : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised inside a pipeline stage with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace ddseg
