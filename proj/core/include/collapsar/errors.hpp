#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace collapsar {

/// Root of every error thrown by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI's JSON error trailer.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define COLLAPSAR_DEFINE_ERROR(Name, tag)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message) : Error(tag, message) {}      \
  }

COLLAPSAR_DEFINE_ERROR(InputError, "input");
COLLAPSAR_DEFINE_ERROR(EvaluationError, "evaluation");
COLLAPSAR_DEFINE_ERROR(ConfigError, "config");
COLLAPSAR_DEFINE_ERROR(EncodeError, "encode");
COLLAPSAR_DEFINE_ERROR(NumericError, "numeric");
COLLAPSAR_DEFINE_ERROR(AnalysisError, "analysis");
COLLAPSAR_DEFINE_ERROR(SchedulerError, "scheduler");
COLLAPSAR_DEFINE_ERROR(MetricError, "metric");
COLLAPSAR_DEFINE_ERROR(IoError, "io");

#undef COLLAPSAR_DEFINE_ERROR

/// Dataset ingestion failure; carries the 1-based line number of the
/// offending CSV row (0 when the failure is not tied to a line).
class LoadError : public Error {
 public:
  LoadError(std::size_t line, const std::string& message)
      : Error("load", line == 0 ? message
                                : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Training aborted on a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, std::size_t step, const std::string& message)
      : Error("divergence", "epoch " + std::to_string(epoch) + " step " +
                                std::to_string(step) + ": " + message),
        epoch_(epoch),
        step_(step) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t epoch_;
  std::size_t step_;
};

}  // namespace collapsar
