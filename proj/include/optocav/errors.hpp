#pragma once

#include <stdexcept>
#include <string>

namespace optocav {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad slot, empty keep set, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Composite dimension exceeds the configured cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: failed eigensolver, overflow, norm jump, corrupted state.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Configuration rejected. `code` is a stable identifier, `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string code, std::string field, const std::string& message)
      : Error("[" + code + "] " + field + ": " + message),
        code_(std::move(code)),
        field_(std::move(field)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string code_;
  std::string field_;
};

}  // namespace optocav
