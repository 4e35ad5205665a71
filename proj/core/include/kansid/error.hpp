#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kansid {

enum class ErrorKind {
  kInvalidArgument,
  kDegenerateData,
  kInvalidState,
  kNotSymbolic,
  kTrainingDiverged,
  kSimulationDiverged,
  kParse,
};

/// Base of every error the library throws. `kind()` lets callers (the CLI in
/// particular) map failures to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

  /// Usage/config/data-shape problems as opposed to domain outcomes such as
  /// divergence or a non-symbolic network.
  [[nodiscard]] bool is_usage_error() const noexcept {
    return kind_ == ErrorKind::kInvalidArgument || kind_ == ErrorKind::kParse ||
           kind_ == ErrorKind::kDegenerateData || kind_ == ErrorKind::kInvalidState;
  }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::kInvalidArgument, what) {}
};

class DegenerateData : public Error {
 public:
  explicit DegenerateData(const std::string& what) : Error(ErrorKind::kDegenerateData, what) {}
};

class InvalidState : public Error {
 public:
  explicit InvalidState(const std::string& what) : Error(ErrorKind::kInvalidState, what) {}
};

class NotSymbolic : public Error {
 public:
  NotSymbolic(const std::string& what, std::vector<std::string> offending)
      : Error(ErrorKind::kNotSymbolic, what), offending_(std::move(offending)) {}
  [[nodiscard]] const std::vector<std::string>& offending_edges() const noexcept { return offending_; }

 private:
  std::vector<std::string> offending_;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, std::vector<double> last_good)
      : Error(ErrorKind::kTrainingDiverged, what), last_good_(std::move(last_good)) {}
  [[nodiscard]] const std::vector<double>& last_good_parameters() const noexcept { return last_good_; }

 private:
  std::vector<double> last_good_;
};

class SimulationDiverged : public Error {
 public:
  SimulationDiverged(const std::string& what, double time_s)
      : Error(ErrorKind::kSimulationDiverged, what), time_s_(time_s) {}
  [[nodiscard]] double time_seconds() const noexcept { return time_s_; }

 private:
  double time_s_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::kParse, what) {}
};

}  // namespace kansid
