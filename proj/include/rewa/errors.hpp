#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rewa {

// Base class for every typed error thrown by the library. Divergence and
// bad inputs surface as one of these, never as silent NaN.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class InvalidSupport : public Error {
 public:
  using Error::Error;
};

class EmptyBatch : public Error {
 public:
  using Error::Error;
};

class NegativeEigenvalue : public Error {
 public:
  using Error::Error;
};

class SingularCoefficient : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class StepTooLarge : public Error {
 public:
  using Error::Error;
};

class NoRoot : public Error {
 public:
  using Error::Error;
};

class ConditionViolated : public Error {
 public:
  using Error::Error;
};

class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

class UnsortedThresholds : public Error {
 public:
  using Error::Error;
};

class MissingRun : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Coordinate descent ran out of sweeps; the last iterate is attached so the
// caller can inspect or keep it.
class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, std::vector<double> last)
      : Error(what), last_iterate(std::move(last)) {}

  std::vector<double> last_iterate;
};

}  // namespace rewa
