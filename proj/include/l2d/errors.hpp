// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace l2d {

// Base for every error raised by the library. `module()` names the subsystem
// that raised it so the CLI can report module-tagged context.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

// Input outside an operation's domain (degenerate orbit, bad parameter).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Laser range outside [u_min, u_max].
class InfeasibleEngagement : public Error {
 public:
  using Error::Error;
};

// Debris graph exceeded its node cap with overflow policy `error`.
class TruncationError : public Error {
 public:
  TruncationError(int step, const std::string& what)
      : Error("teg", what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// Scenario file failed schema validation. `field()` is the dotted key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("scenario", field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Brute-force oracle refused an instance above its search-space guard.
class GuardExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace l2d
