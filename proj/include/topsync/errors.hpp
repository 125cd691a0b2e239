#pragma once

#include <stdexcept>
#include <string>

namespace topsync {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lattice or parameter specification that violates its invariants.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// Argument that is well-typed but outside the operation's domain
/// (asymmetric matrix, bad index, dimension mismatch, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class WindowError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Adaptive integration could not continue. Carries the last time at which
/// the state was finite and accepted.
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double last_good_time)
      : Error(what), last_good_time_(last_good_time) {}
  double last_good_time() const noexcept { return last_good_time_; }

 private:
  double last_good_time_;
};

/// A covariance or density matrix that no longer describes a quantum state.
class PhysicalityError : public Error {
 public:
  using Error::Error;
};

/// Phase of an oscillator is not defined because its amplitude vanished.
class PhaseUndefined : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace topsync
