#pragma once

#include <stdexcept>
#include <string>

namespace kinv {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Inconsistent or out-of-range dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid entries (non-finite values, asymmetric input, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A matrix factorization failed (non-SPD input, ...).
class DecompositionError : public Error {
 public:
  DecompositionError(const std::string& what, int pivot = -1)
      : Error(what), pivot_(pivot) {}
  /// Index of the failing pivot, or -1 when not applicable.
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// Numerically singular system or similar runtime numeric failure.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Rank precondition violated.
class RankError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration. Carries the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A forward-model evaluation failed inside a batch.
class BatchError : public Error {
 public:
  BatchError(std::size_t index, const std::string& cause)
      : Error("forward evaluation failed at point " + std::to_string(index) +
              ": " + cause),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Ensemble deviations have numerical rank zero.
class DegenerateEnsembleError : public Error {
 public:
  using Error::Error;
};

}  // namespace kinv
