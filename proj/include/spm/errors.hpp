#pragma once

#include <stdexcept>
#include <string>

namespace spm {

/// Base class for all library failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical estimation failed: non-SPD covariance, degenerate data,
/// rank-deficient scatter.
class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& what) : Error(what) {}
};

/// A label assignment makes the observed sequence impossible under the
/// current model (zero total forward mass at some step).
class ImpossibleLabelingError : public Error {
 public:
  ImpossibleLabelingError(const std::string& what, int time_index)
      : Error(what), time_index_(time_index) {}
  int time_index() const { return time_index_; }

 private:
  int time_index_;
};

/// A state received (numerically) zero posterior mass during an M-step.
class StarvedStateError : public Error {
 public:
  StarvedStateError(const std::string& what, int state)
      : Error(what), state_(state) {}
  int state() const { return state_; }

 private:
  int state_;
};

/// Every candidate model in a selection sweep failed to fit.
class ModelSelectionError : public Error {
 public:
  explicit ModelSelectionError(const std::string& what) : Error(what) {}
};

/// Endpoint constraints on a simulated sequence cannot be satisfied.
class InfeasibleConstraintError : public Error {
 public:
  explicit InfeasibleConstraintError(const std::string& what) : Error(what) {}
};

/// Malformed or inconsistent configuration input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// File system or data file failure.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace spm
