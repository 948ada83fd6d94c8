#pragma once

#include <stdexcept>
#include <string>

namespace archipelago {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector/mask length mismatches and out-of-range feature indices.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid argument values: empty sets, bad counts, malformed expressions.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// An interaction query named a feature whose target and baseline values
// coincide; such a feature spans no axis of the perturbation cube.
class InertFeatureError : public Error {
 public:
  using Error::Error;
};

// Exhaustive-enumeration request beyond the configured feature cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Failure of an underlying function evaluation; carries the offending mask.
class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what, std::string mask = {})
      : Error(what), mask_(std::move(mask)) {}
  const std::string& mask() const { return mask_; }

 private:
  std::string mask_;
};

}  // namespace archipelago
