#pragma once

#include <stdexcept>
#include <string>

namespace upconv {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  ok = 0,
  usage = 2,
  config = 3,
  numerical = 4,
};

/// Base class for every error raised by the library. Each error knows the
/// exit code the CLI maps it to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual ExitCode exit_code() const noexcept { return ExitCode::numerical; }
};

// Numerical / physical-domain failures (exit code 4).
class DomainError : public Error {
  using Error::Error;
};
class TuningError : public Error {
  using Error::Error;
};
class CalibrationError : public Error {
  using Error::Error;
};
class FitError : public Error {
  using Error::Error;
};
class CoverageError : public Error {
  using Error::Error;
};
class RangeError : public Error {
  using Error::Error;
};
class EstimationError : public Error {
  using Error::Error;
};
class UnrecoverableBandError : public Error {
  using Error::Error;
};
class DesignError : public Error {
  using Error::Error;
};

/// Malformed user input to an operation (too few points, bad file).
class InputError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

/// Configuration failed validation. `path` is the offending field, e.g.
/// `waveguide.length_mm`.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  [[nodiscard]] const std::string& path() const noexcept { return path_; }
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::config; }

 private:
  std::string path_;
};

}  // namespace upconv
