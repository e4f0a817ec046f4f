#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adaptive_median {

// Invalid mechanism or session parameters (epsilon <= 0, beta outside (0,1), ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid data: NaN inputs, empty distributions, malformed grids.
class DataError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Dataset too small for the requested calibration. Carries the required size.
class InsufficientDataError : public DataError {
 public:
  InsufficientDataError(const std::string& what, std::size_t required)
      : DataError(what), required_(required) {}
  std::size_t required() const { return required_; }

 private:
  std::size_t required_ = 0;
};

// Instance exceeds the desk-scale cap of an exact oracle or enumerated universe.
class ScaleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An oracle or peer violated its stated contract (e.g. both binary-search
// stopping conditions failed at once, which cannot happen with an honest oracle).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Multiplicative-weights update budget exhausted; the session cannot continue.
class UpdateBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adaptive_median
