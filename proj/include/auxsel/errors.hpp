#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace auxsel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad CSV, wrong column count, inconsistent records.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The data cannot support the requested fit (e.g. all observations equal).
class DegenerateDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Matrix inversion refused because the condition estimate exceeds the limit.
class IllConditionedError : public NumericalError {
 public:
  IllConditionedError(const std::string& what, double condition)
      : NumericalError(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// A derivative evaluated to NaN/Inf at a specific record.
class NonFiniteRecordError : public NumericalError {
 public:
  NonFiniteRecordError(const std::string& what, std::size_t record)
      : NumericalError(what), record_(record) {}
  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

}  // namespace auxsel
