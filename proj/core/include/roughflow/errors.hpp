#pragma once

#include <stdexcept>
#include <string>

namespace roughflow {

// Bad input: dimensions, ranges, malformed files. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The numerics gave up. The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExplosionError : public NumericalError {
 public:
  ExplosionError(const std::string& what, double time) : NumericalError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class SingularityError : public NumericalError {
 public:
  SingularityError(const std::string& what, double time) : NumericalError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace roughflow
