#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pite {

/// Broad failure class; the CLI maps each to an exit code.
enum class ErrorCategory { config, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

// data-model

class MissingValue : public DataError {
 public:
  MissingValue(std::size_t row, std::string column)
      : DataError("missing value at row " + std::to_string(row) + ", column '" + column + "'"),
        row_(row),
        column_(std::move(column)) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class InvalidValue : public DataError {
 public:
  InvalidValue(std::size_t row, const std::string& column, const std::string& detail)
      : DataError("invalid value at row " + std::to_string(row) + ", column '" + column +
                  "': " + detail) {}
};

class NonBinaryTreatment : public DataError {
 public:
  explicit NonBinaryTreatment(std::size_t row)
      : DataError("treatment value at row " + std::to_string(row) + " is not 0 or 1"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class NonBinaryCovariate : public DataError {
 public:
  NonBinaryCovariate(std::size_t row, const std::string& column)
      : DataError("binary covariate '" + column + "' has a value other than 0/1 at row " +
                  std::to_string(row)) {}
};

class DegenerateArm : public DataError {
 public:
  explicit DegenerateArm(const std::string& what) : DataError(what) {}
};

class EmptyCovariates : public DataError {
 public:
  EmptyCovariates() : DataError("no covariate columns selected") {}
};

class DimensionMismatch : public DataError {
 public:
  explicit DimensionMismatch(const std::string& what) : DataError(what) {}
};

// numerics

class RankDeficient : public NumericalError {
 public:
  explicit RankDeficient(const std::string& what) : NumericalError(what) {}
};

class TooFewValues : public NumericalError {
 public:
  explicit TooFewValues(const std::string& what) : NumericalError(what) {}
};

class ZeroPooledSD : public NumericalError {
 public:
  ZeroPooledSD() : NumericalError("pooled outcome SD is zero (constant outcome in both arms)") {}
};

class PermutationFitFailure : public NumericalError {
 public:
  PermutationFitFailure(std::size_t permutation, const std::string& cause)
      : NumericalError("fit failed in permutation " + std::to_string(permutation) + ": " + cause),
        permutation_(permutation) {}
  std::size_t permutation() const noexcept { return permutation_; }

 private:
  std::size_t permutation_;
};

class TooLarge : public ConfigError {
 public:
  explicit TooLarge(const std::string& what) : ConfigError(what) {}
};

class CalibrationFailure : public NumericalError {
 public:
  explicit CalibrationFailure(const std::string& what) : NumericalError(what) {}
};

}  // namespace pite
