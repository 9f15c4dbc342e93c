#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace romkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched meshes, component counts or matrix shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration (bad flags, non-positive constants).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates a documented invariant (NaN, asymmetry, zero energy).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A requested basis rank exceeds the numerical rank of the data.
class RankError : public Error {
 public:
  RankError(const std::string& what, int first_defective)
      : Error(what), first_defective_(first_defective) {}
  int first_defective() const { return first_defective_; }

 private:
  int first_defective_;
};

/// Kernel matrix too ill-conditioned to invert without regularization.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Full-order solver failure (blow-up, singular pressure system).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Supremizer computation failed for one pressure mode.
class EnrichmentError : public Error {
 public:
  EnrichmentError(const std::string& what, int mode) : Error(what), mode_(mode) {}
  int mode() const { return mode_; }

 private:
  int mode_;
};

/// Newton iteration of an online step did not converge.
class StepError : public Error {
 public:
  StepError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residual_history() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// An offline/online pipeline stage failed; wraps the stage name.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace romkit
