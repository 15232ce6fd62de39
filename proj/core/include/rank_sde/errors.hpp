#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rank_sde {

enum class ErrorKind {
  invalid_state,
  dimension_mismatch,
  invariant_violation,
  alpha_unbounded,
  inversion_failure,
  parameter_error,
  config_missing,
  config_parse,
  constraint_violation,
  io_error,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Constraint violations additionally name the offending config key.
class ConstraintError : public Error {
 public:
  ConstraintError(std::string key, const std::string& message)
      : Error(ErrorKind::constraint_violation, key + ": " + message),
        key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace rank_sde
