#pragma once

#include <stdexcept>
#include <string>

namespace snod {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite state or input handed to a right-hand side.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters, dimension mismatches, malformed config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Branch tracing could not keep consecutive equilibria connected.
class ContinuationError : public Error {
 public:
  using Error::Error;
};

// The requested quantity does not exist in this parameter regime.
class RegimeError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}

  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace snod
