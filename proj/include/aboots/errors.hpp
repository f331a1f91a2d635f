#pragma once

#include <stdexcept>
#include <string>

namespace aboots {

// Base for every error raised by the library. Callers that only need to
// distinguish user mistakes from internal failures can use `is_user_error`.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_user_error() const noexcept { return true; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  bool is_user_error() const noexcept override { return false; }
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class InvalidHyperparameterError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
  bool is_user_error() const noexcept override { return false; }
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint payload does not match the model it is loaded into.
class CheckpointError : public Error {
 public:
  using Error::Error;
  bool is_user_error() const noexcept override { return false; }
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
  bool is_user_error() const noexcept override { return false; }
};

}  // namespace aboots
