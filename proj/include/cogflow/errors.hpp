#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cogflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed values that violate an operation's preconditions.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class BindingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool retriable, std::string diagnostics = {})
      : Error(what), retriable_(retriable), diagnostics_(std::move(diagnostics)) {}

  bool retriable() const noexcept { return retriable_; }
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  bool retriable_;
  std::string diagnostics_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step) : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace cogflow
