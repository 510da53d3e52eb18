#pragma once

#include <stdexcept>
#include <string>

namespace specdiff {

enum class ErrorKind {
  InvalidInput,
  TimeStepTooCoarse,
  Resource,
  InsufficientData,
  FitFailure,
  CalibrationFailure,
  PoorFit,
  NoCrossover,
  MissingInput,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every error raised by the library. `kind()` is stable and is what
/// the CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::InvalidInput, what) {}
};

class TimeStepTooCoarse : public Error {
 public:
  explicit TimeStepTooCoarse(const std::string& what) : Error(ErrorKind::TimeStepTooCoarse, what) {}
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& what) : Error(ErrorKind::Resource, what) {}
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& what) : Error(ErrorKind::InsufficientData, what) {}
};

class MissingInput : public Error {
 public:
  explicit MissingInput(const std::string& what) : Error(ErrorKind::MissingInput, what) {}
};

}  // namespace specdiff

#include <functional>
#include <string_view>

namespace specdiff {

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the warning sink (default: one line on std::clog). Returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace specdiff
