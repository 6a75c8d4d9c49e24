#pragma once

#include <stdexcept>
#include <string>

namespace amis {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A simulated state became NaN or infinite.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

// Inputs whose shapes do not fit together (grid, dimensions, missing data).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Invalid combination of options (scheme, adaptation mode, schedule, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Estimator is undefined for the given input, e.g. every weighted term is zero.
class UndefinedEstimateError : public Error {
 public:
  using Error::Error;
};

}  // namespace amis
