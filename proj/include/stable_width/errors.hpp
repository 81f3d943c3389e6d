#pragma once

#include <stdexcept>
#include <string>

namespace stable_width {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument outside an operation's domain.
/// The CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function (alpha not in
/// (0,2], z < 1 for the product tail, nu >= alpha, ...).
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Root bracketing / quadrature / overflow failures. Exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace stable_width
